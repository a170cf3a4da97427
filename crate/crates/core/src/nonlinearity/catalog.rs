use super::dual::Dual;

pub const BUILTIN_NAMES: &[&str] = &["zero", "example51"];

/// Expression text equivalent to the `example51` builtin.
pub const EXAMPLE51_EXPR: &str = "(u^2+abs(v)^3)*sin(ln(u^2+abs(v)^3+1))";

/// `F = s·sin(ln(s+1))` with `s = u² + |v|³`, differentiated in closed form.
pub(crate) fn example51(u: f64, v: f64) -> Dual {
    let s = u * u + v.abs().powi(3);
    let l = (s + 1.0).ln();
    let (sin_l, cos_l) = l.sin_cos();
    let df_ds = sin_l + s * cos_l / (s + 1.0);
    Dual {
        re: s * sin_l,
        du: 2.0 * u * df_ds,
        dv: 3.0 * v.abs() * v * df_ds,
    }
}
