//! Float helpers for `no_std` builds.

pub(crate) fn log2_1p(x: f64) -> f64 {
    libm::log2(1.0 + x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) const LN_2: f64 = core::f64::consts::LN_2;
