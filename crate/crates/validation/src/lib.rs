//! Holds the `acceptance` test target, which runs the estimator end to end
//! at full sample sizes and prints one PASS/FAIL line per check.
