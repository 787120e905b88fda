#![allow(dead_code)]

use spotforward_core::TimeGrid;

/// Plain backward RK4 on `P' = P(ρP/c + 1)`, `δ' = δ(ρP/c + 1) − c m`
/// with `P(T) = 1`, `δ(T) = 0`. Independent of the crate's reciprocal form.
/// Stage times are nudged inside the step so a jump of `c` at a knot is seen
/// from the correct side.
pub fn direct_rk4(c: impl Fn(f64) -> f64, m: f64, rho: f64, horizon: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = horizon / n as f64;
    let eps = 1e-9 * h;
    let f = |t: f64, p: f64, d: f64, lo: f64| {
        let ct = c(t.clamp(lo + eps, lo + h - eps));
        let a = rho * p / ct + 1.0;
        (p * a, d * a - ct * m)
    };
    let mut p = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    p[n] = 1.0;
    for i in (0..n).rev() {
        let t = (i + 1) as f64 * h;
        let lo = i as f64 * h;
        let (y, z) = (p[i + 1], d[i + 1]);
        let (k1, l1) = f(t, y, z, lo);
        let (k2, l2) = f(t - 0.5 * h, y - 0.5 * h * k1, z - 0.5 * h * l1, lo);
        let (k3, l3) = f(t - 0.5 * h, y - 0.5 * h * k2, z - 0.5 * h * l2, lo);
        let (k4, l4) = f(t - h, y - h * k3, z - h * l3, lo);
        p[i] = y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        d[i] = z - h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }
    (p, d)
}

/// Composite trapezoid running integral.
pub fn trapezoid_running(y: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for i in 1..y.len() {
        out[i] = out[i - 1] + 0.5 * h * (y[i - 1] + y[i]);
    }
    out
}

pub fn grid(horizon: f64, n: usize) -> TimeGrid {
    TimeGrid::uniform(horizon, n).unwrap()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// 1000 quote rows, 200 per tenor, with `F^Y/F^H = e^{−0.044 τ}` for
/// tenor `τ` in years and drifting price levels.
pub fn constant_ratio_quotes() -> String {
    use std::fmt::Write;
    let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
    let mut s = String::from("date,tenor_months,fwd_onshore,fwd_offshore,spot_onshore,spot_offshore\n");
    for day in 0..200u64 {
        let date = start + chrono::Days::new(day);
        let spot = 6.4 + 0.002 * day as f64;
        for tenor in [1u32, 2, 3, 6, 12] {
            let fh = spot * (1.0 + 0.001 * tenor as f64);
            let fy = fh * (-0.044 * tenor as f64 / 12.0).exp();
            writeln!(s, "{date},{tenor},{fy:.17e},{fh:.17e},{spot},{:.6}", spot * 1.0003).unwrap();
        }
    }
    s
}

/// Runs the CLI in-process and returns `(status, stdout, stderr)`.
pub fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("spotforward").chain(args.iter().copied());
    let code = spotforward_core::cli_io::run_cli_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
