//! Compensated summation kernels.

use twofloat::TwoFloat;

/// Dot product accumulated as if in twice the working precision
/// (Ogita, Rump & Oishi "Dot2"), returned unrounded as a double-double.
///
/// Terms are summed in iteration order, so the result is a deterministic
/// function of the inputs.
#[inline]
pub(crate) fn dot2<I>(pairs: I) -> TwoFloat
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (a, b) in pairs {
        let p = a * b;
        let p_err = a.mul_add(b, -p);
        let s = sum + p;
        let z = s - sum;
        let s_err = (sum - (s - z)) + (p - z);
        sum = s;
        comp += p_err + s_err;
    }
    TwoFloat::new_add(sum, comp)
}

/// `a / b` in double-double. The `Div` impls in `twofloat` lose the low
/// word, so the quotient is refined by two correction steps instead.
#[inline]
pub(crate) fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}
