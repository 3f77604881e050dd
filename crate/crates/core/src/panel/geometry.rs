use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest stiffener count any panel may carry.
pub const MAX_STIFFENERS: usize = 7;

/// Dimensions of one stiffened panel. All lengths in meters.
///
/// Stiffeners run along the panel length (global x), are evenly spaced across
/// the width (global y) and stand on the plate (global +z). Each stiffener is an
/// angle section: a web of height `web_height` topped by a flange of width
/// `flange_width` that extends towards +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelGeometry {
    pub length: f64,
    pub width: f64,
    pub plate_thickness: f64,
    pub web_thickness: f64,
    pub web_height: f64,
    pub flange_thickness: f64,
    pub flange_width: f64,
    pub n_stiffeners: usize,
}

impl PanelGeometry {
    /// An unstiffened rectangular plate, mostly useful for tests.
    pub fn flat_plate(length: f64, width: f64, thickness: f64) -> Self {
        Self {
            length,
            width,
            plate_thickness: thickness,
            web_thickness: thickness,
            web_height: thickness,
            flange_thickness: thickness,
            flange_width: thickness,
            n_stiffeners: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("length", self.length),
            ("width", self.width),
            ("plate_thickness", self.plate_thickness),
            ("web_thickness", self.web_thickness),
            ("web_height", self.web_height),
            ("flange_thickness", self.flange_thickness),
            ("flange_width", self.flange_width),
        ];
        for (name, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_stiffeners > MAX_STIFFENERS {
            return Err(Error::Validation(format!(
                "at most {MAX_STIFFENERS} stiffeners supported, got {}",
                self.n_stiffeners
            )));
        }
        if self.n_stiffeners > 0 && self.flange_width >= self.stiffener_spacing() {
            return Err(Error::Validation(format!(
                "flange width {} does not fit the stiffener spacing {}",
                self.flange_width,
                self.stiffener_spacing()
            )));
        }
        Ok(())
    }

    pub fn stiffener_spacing(&self) -> f64 {
        self.width / (self.n_stiffeners + 1) as f64
    }

    /// y coordinate of stiffener `j` (0-based).
    pub fn stiffener_y(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.stiffener_spacing()
    }

    /// Checks every dimension against `ranges`.
    pub fn within(&self, ranges: &GeometryRanges) -> bool {
        let inside = |v: f64, r: Interval| v >= r.lower && v <= r.upper;
        inside(self.length, ranges.length)
            && inside(self.width, ranges.width)
            && inside(self.plate_thickness, ranges.plate_thickness)
            && inside(self.web_thickness, ranges.web_thickness)
            && inside(self.web_height, ranges.web_height)
            && inside(self.flange_thickness, ranges.flange_thickness)
            && inside(self.flange_width, ranges.flange_width)
            && self.n_stiffeners >= ranges.n_stiffeners.0
            && self.n_stiffeners <= ranges.n_stiffeners.1
    }
}

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lower == self.upper {
            self.lower
        } else {
            rng.gen_range(self.lower..=self.upper)
        }
    }
}

/// Bounds for every geometric variable, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryRanges {
    pub length: Interval,
    pub width: Interval,
    pub plate_thickness: Interval,
    pub web_thickness: Interval,
    pub web_height: Interval,
    pub flange_thickness: Interval,
    pub flange_width: Interval,
    pub n_stiffeners: (usize, usize),
}

const MM: f64 = 1e-3;

impl GeometryRanges {
    /// Box-beam panels under four-point bending or uniform pressure.
    pub fn thick_members() -> Self {
        Self {
            length: Interval::fixed(3.0),
            width: Interval::fixed(3.0),
            plate_thickness: Interval::new(10.0 * MM, 20.0 * MM),
            web_thickness: Interval::new(5.0 * MM, 20.0 * MM),
            web_height: Interval::new(100.0 * MM, 400.0 * MM),
            flange_thickness: Interval::new(5.0 * MM, 20.0 * MM),
            flange_width: Interval::new(50.0 * MM, 150.0 * MM),
            n_stiffeners: (2, 7),
        }
    }

    /// Box-beam panels under non-uniform pressure; thinner members.
    pub fn thin_members() -> Self {
        Self {
            length: Interval::fixed(3.0),
            width: Interval::fixed(3.0),
            plate_thickness: Interval::new(5.0 * MM, 10.0 * MM),
            web_thickness: Interval::new(4.0 * MM, 8.0 * MM),
            web_height: Interval::new(50.0 * MM, 150.0 * MM),
            flange_thickness: Interval::new(4.0 * MM, 8.0 * MM),
            flange_width: Interval::new(50.0 * MM, 100.0 * MM),
            n_stiffeners: (2, 7),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in self.named() {
            if !(r.lower.is_finite() && r.upper.is_finite()) || r.lower <= 0.0 {
                return Err(Error::Config(format!(
                    "range {name} must be positive and finite, got [{}, {}]",
                    r.lower, r.upper
                )));
            }
            if r.lower > r.upper {
                return Err(Error::Config(format!(
                    "range {name} has lower {} > upper {}",
                    r.lower, r.upper
                )));
            }
        }
        let (lo, hi) = self.n_stiffeners;
        if lo > hi || hi > MAX_STIFFENERS {
            return Err(Error::Config(format!(
                "n_stiffeners range [{lo}, {hi}] must satisfy lower <= upper <= {MAX_STIFFENERS}"
            )));
        }
        let min_spacing = self.width.lower / (hi + 1) as f64;
        if hi > 0 && self.flange_width.upper >= min_spacing {
            return Err(Error::Config(format!(
                "flange width up to {} cannot fit the narrowest stiffener spacing {min_spacing}",
                self.flange_width.upper
            )));
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, Interval); 7] {
        [
            ("length", self.length),
            ("width", self.width),
            ("plate_thickness", self.plate_thickness),
            ("web_thickness", self.web_thickness),
            ("web_height", self.web_height),
            ("flange_thickness", self.flange_thickness),
            ("flange_width", self.flange_width),
        ]
    }
}

impl Default for GeometryRanges {
    fn default() -> Self {
        Self::thin_members()
    }
}

/// Draws a panel uniformly from `ranges`. Identical seeds give identical panels.
pub fn sample_panel(ranges: &GeometryRanges, seed: u64) -> Result<PanelGeometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_panel_with(ranges, &mut rng)
}

pub(crate) fn sample_panel_with(
    ranges: &GeometryRanges,
    rng: &mut impl Rng,
) -> Result<PanelGeometry> {
    ranges.validate()?;
    let g = PanelGeometry {
        length: ranges.length.sample(rng),
        width: ranges.width.sample(rng),
        plate_thickness: ranges.plate_thickness.sample(rng),
        web_thickness: ranges.web_thickness.sample(rng),
        web_height: ranges.web_height.sample(rng),
        flange_thickness: ranges.flange_thickness.sample(rng),
        flange_width: ranges.flange_width.sample(rng),
        n_stiffeners: rng.gen_range(ranges.n_stiffeners.0..=ranges.n_stiffeners.1),
    };
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plate_thickness_stays_in_table_range() {
        let ranges = GeometryRanges::thick_members();
        for seed in 0..200 {
            let g = sample_panel(&ranges, seed).unwrap();
            assert!(g.plate_thickness >= 0.010 && g.plate_thickness <= 0.020);
            assert!((2..=7).contains(&g.n_stiffeners));
        }
    }

    #[test]
    fn collapsed_interval_is_exact() {
        let mut ranges = GeometryRanges::thick_members();
        ranges.plate_thickness = Interval::fixed(0.010);
        let g = sample_panel(&ranges, 3).unwrap();
        assert_eq!(g.plate_thickness, 0.010);
    }

    #[test]
    fn same_seed_same_panel() {
        let r = GeometryRanges::default();
        assert_eq!(sample_panel(&r, 42).unwrap(), sample_panel(&r, 42).unwrap());
        assert_ne!(sample_panel(&r, 42).unwrap(), sample_panel(&r, 43).unwrap());
    }

    #[test]
    fn inverted_range_is_rejected() {
        let mut r = GeometryRanges::default();
        r.web_height = Interval::new(0.2, 0.1);
        assert!(matches!(sample_panel(&r, 0), Err(Error::Config(_))));
        let mut r = GeometryRanges::default();
        r.n_stiffeners = (3, 9);
        assert!(matches!(r.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn stiffener_count_covers_full_range() {
        let r = GeometryRanges::default();
        let mut seen = [false; 8];
        for seed in 0..500 {
            seen[sample_panel(&r, seed).unwrap().n_stiffeners] = true;
        }
        assert_eq!(&seen[2..], &[true; 6]);
        assert!(!seen[0] && !seen[1]);
    }
}
