use crate::error::{Error, Result};

/// Piecewise-linear resampling of `(position, value)` pairs onto `n` evenly
/// spaced positions spanning the first to the last sample.
pub fn resample_profile(samples: &[(f64, f64)], n: usize) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::Domain(format!(
            "resampling needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain("sample positions must be strictly increasing".into()));
    }
    let (x0, x1) = (samples[0].0, samples[samples.len() - 1].0);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let x = if n == 1 {
            x0
        } else if i == n - 1 {
            x1
        } else {
            x0 + (x1 - x0) * i as f64 / (n - 1) as f64
        };
        while seg + 2 < samples.len() && x > samples[seg + 1].0 {
            seg += 1;
        }
        let (a, b) = (samples[seg], samples[seg + 1]);
        let t = (x - a.0) / (b.0 - a.0);
        out.push(if t == 0.0 {
            a.1
        } else if t == 1.0 {
            b.1
        } else {
            a.1 + t * (b.1 - a.1)
        });
    }
    Ok(out)
}

/// Linear interpolation in a profile sampled uniformly over `[0, 1]`.
pub(crate) fn interp_uniform(profile: &[f64], t: f64) -> f64 {
    let last = profile.len() - 1;
    let x = t.clamp(0.0, 1.0) * last as f64;
    let i = (x.floor() as usize).min(last.saturating_sub(1));
    let f = x - i as f64;
    if last == 0 {
        return profile[0];
    }
    profile[i] + f * (profile[i + 1] - profile[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile() {
        let s: Vec<_> = (0..7).map(|i| (i as f64 * 0.3, 5.0)).collect();
        assert_eq!(resample_profile(&s, 20).unwrap(), vec![5.0; 20]);
    }

    #[test]
    fn linear_ramp() {
        let r = resample_profile(&[(0.0, 0.0), (0.4, 0.4), (1.0, 1.0)], 20).unwrap();
        for (i, v) in r.iter().enumerate() {
            assert!((v - i as f64 / 19.0).abs() < 1e-15);
        }
    }

    #[test]
    fn aligned_round_trip() {
        // Original positions are every third point of the 19-step grid.
        let orig: Vec<(f64, f64)> = (0..7)
            .map(|i| {
                let x = i as f64 * 3.0 / 18.0;
                (x, (3.0 * x).sin() + x * x)
            })
            .collect();
        let fine = resample_profile(&orig, 19).unwrap();
        for (k, (_, y)) in orig.iter().enumerate() {
            assert!((fine[3 * k] - y).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(resample_profile(&[(0.0, 1.0)], 5), Err(Error::Domain(_))));
        assert!(resample_profile(&[(0.0, 1.0), (0.0, 2.0)], 5).is_err());
    }

    #[test]
    fn uniform_interpolation() {
        let p = [0.0, 1.0, 4.0];
        assert_eq!(interp_uniform(&p, 0.0), 0.0);
        assert_eq!(interp_uniform(&p, 1.0), 4.0);
        assert!((interp_uniform(&p, 0.75) - 2.5).abs() < 1e-15);
    }
}
