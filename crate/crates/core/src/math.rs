// Float helpers that `core` does not provide without std.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Sum of non-negative terms in increasing order, so the result depends
/// only on the multiset of terms.
pub(crate) fn sorted_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: alloc::vec::Vec<f64> = terms.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().fold(0.0, |a, b| a + b)
}
