//! Day counting via the Julian Day Number of a proleptic Gregorian date.

/// Julian Day Number (Fliegel & Van Flandern integer formula).
pub fn julian_day(year: i64, month: i64, day: i64) -> i64 {
    let a = (14 - month) / 12;
    let y = year + 4800 - a;
    let m = month + 12 * a - 3;
    day + (153 * m + 2) / 5 + 365 * y + y / 4 - y / 100 + y / 400 - 32045
}

/// Days from `start` to `end` inclusive, each given as `(y, m, d)`.
pub fn inclusive_days(start: (i64, i64, i64), end: (i64, i64, i64)) -> i64 {
    julian_day(end.0, end.1, end.2) - julian_day(start.0, start.1, start.2) + 1
}
