/// Satellite-like test object: a bright bus, two ribbed solar panels, a dish
/// and a boom, centred in the middle half of an `n × n` grid and scaled to
/// sum to `total`.
pub fn satellite_object(n: usize, total: f64) -> Vec<f64> {
    let s = n as f64 / 64.0;
    let c = n as f64 / 2.0;
    let mut o = vec![0.0; n * n];
    let mut paint = |r0: f64, r1: f64, c0: f64, c1: f64, v: f64| {
        for r in 0..n {
            for col in 0..n {
                let (y, x) = (r as f64 + 0.5 - c, col as f64 + 0.5 - c);
                if y >= r0 * s && y < r1 * s && x >= c0 * s && x < c1 * s {
                    o[r * n + col] = v;
                }
            }
        }
    };
    // panels, with dark ribs every few pixels
    paint(-3.0, 3.0, -15.0, -5.0, 0.45);
    paint(-3.0, 3.0, 5.0, 15.0, 0.45);
    for k in [-12.0, -9.0, -6.0, 6.0, 9.0, 12.0] {
        paint(-3.0, 3.0, k, k + 1.0, 0.25);
    }
    // struts and bus
    paint(-0.5, 0.5, -5.0, 5.0, 0.6);
    paint(-5.0, 5.0, -3.0, 3.0, 1.0);
    paint(-2.0, 1.0, -1.0, 2.0, 1.4);
    // boom
    paint(-11.0, -5.0, -0.5, 0.5, 0.7);
    for r in 0..n {
        for col in 0..n {
            let (y, x) = (r as f64 + 0.5 - c, col as f64 + 0.5 - c);
            let (dy, dx) = (y / s - 8.0, x / s - 1.0);
            if dx * dx + dy * dy <= 9.0 {
                o[r * n + col] = 0.8;
            }
        }
    }
    let sum: f64 = o.iter().sum();
    o.iter_mut().for_each(|v| *v *= total / sum);
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_nonnegative_and_compact() {
        for n in [16, 32, 64] {
            let o = satellite_object(n, 500.0);
            assert!((o.iter().sum::<f64>() - 500.0).abs() < 1e-9);
            assert!(o.iter().all(|&v| v >= 0.0));
            // outer quarter border is empty
            for r in 0..n {
                for c in 0..n {
                    if r < n / 8 || r >= n - n / 8 || c < n / 8 || c >= n - n / 8 {
                        assert_eq!(o[r * n + c], 0.0, "n={n} ({r},{c})");
                    }
                }
            }
        }
    }
}
