//! Fuzzy HSI color space.
//!
//! A [`Partition`] is a list of [`FuzzyColor`]s, each described by one
//! trapezoidal membership function per HSI channel. A pixel's degree of
//! membership in a color is the minimum of its three channel memberships.
//!
//! The default partition has 92 colors: ten hue families crossed with three
//! saturation bands and three intensity bands, plus black and white.
//! Replacement partitions can be loaded from JSON.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a fuzzy color within a partition.
pub type ColorId = u16;

/// Below this saturation the hue channel is ignored (treated as membership 1).
pub const ACHROMATIC_SATURATION: f64 = 0.05;

/// Number of colors produced by [`default_partition`].
pub const DEFAULT_COLOR_COUNT: usize = 92;

/// A pixel in HSI coordinates: hue in degrees `[0, 360)`, saturation and
/// intensity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsiPixel {
    pub h: f64,
    pub s: f64,
    pub i: f64,
}

impl HsiPixel {
    pub fn new(h: f64, s: f64, i: f64) -> Self {
        Self {
            h: h.rem_euclid(360.0),
            s: s.clamp(0.0, 1.0),
            i: i.clamp(0.0, 1.0),
        }
    }
}

/// Convert 8-bit RGB to HSI using the intensity-mean formulation.
///
/// Hue is the arccos angle, reflected to `360 - θ` when blue exceeds green.
/// Gray pixels (zero saturation) get hue 0.
pub fn rgb_to_hsi(r: u8, g: u8, b: u8) -> HsiPixel {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let i = (r + g + b) / 3.0;
    if i <= 0.0 {
        return HsiPixel { h: 0.0, s: 0.0, i: 0.0 };
    }
    let s = (1.0 - r.min(g).min(b) / i).clamp(0.0, 1.0);
    let num = 0.5 * ((r - g) + (r - b));
    let den = ((r - g) * (r - g) + (r - b) * (g - b)).sqrt();
    if s <= 1e-12 || den <= 1e-12 {
        return HsiPixel { h: 0.0, s: 0.0, i };
    }
    let theta = (num / den).clamp(-1.0, 1.0).acos().to_degrees();
    let mut h = if b > g { 360.0 - theta } else { theta };
    if h >= 360.0 {
        h -= 360.0;
    }
    HsiPixel { h, s, i }
}

/// Inverse of [`rgb_to_hsi`], clamping out-of-gamut results.
pub fn hsi_to_rgb(p: HsiPixel) -> [u8; 3] {
    let HsiPixel { h, s, i } = p;
    let (r, g, b) = if s <= 0.0 {
        (i, i, i)
    } else {
        let h = h.rem_euclid(360.0);
        let sector = |h: f64| -> (f64, f64, f64) {
            let h = h * PI / 180.0;
            let low = i * (1.0 - s);
            let high = i * (1.0 + s * h.cos() / (PI / 3.0 - h).cos());
            (low, high, 3.0 * i - (low + high))
        };
        if h < 120.0 {
            let (low, high, rest) = sector(h);
            (high, rest, low)
        } else if h < 240.0 {
            let (low, high, rest) = sector(h - 120.0);
            (low, high, rest)
        } else {
            let (low, high, rest) = sector(h - 240.0);
            (rest, low, high)
        }
    };
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    [q(r), q(g), q(b)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipKind {
    TrapezoidLinear,
    /// Breakpoints are degrees taken modulo 360; the support runs
    /// counter-clockwise from `a` to `d`.
    TrapezoidCircular,
}

/// Trapezoidal membership over one channel: rises on `a..b`, equals 1 on
/// `b..=c`, falls on `c..d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMembership {
    pub kind: MembershipKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Hue,
    Unit,
}

impl ChannelMembership {
    pub fn linear(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            kind: MembershipKind::TrapezoidLinear,
            a,
            b,
            c,
            d,
        }
    }

    pub fn circular(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            kind: MembershipKind::TrapezoidCircular,
            a: a.rem_euclid(360.0),
            b: b.rem_euclid(360.0),
            c: c.rem_euclid(360.0),
            d: d.rem_euclid(360.0),
        }
    }

    /// Membership 1 over the whole hue circle.
    pub fn full_hue() -> Self {
        Self::linear(0.0, 0.0, 360.0, 360.0)
    }

    /// Rise, plateau and fall widths in degrees for circular memberships.
    fn arcs(&self) -> (f64, f64, f64) {
        (
            (self.b - self.a).rem_euclid(360.0),
            (self.c - self.b).rem_euclid(360.0),
            (self.d - self.c).rem_euclid(360.0),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            MembershipKind::TrapezoidLinear => {
                let Self { a, b, c, d, .. } = *self;
                if x >= b && x <= c {
                    1.0
                } else if x > a && x < b {
                    (x - a) / (b - a)
                } else if x > c && x < d {
                    (d - x) / (d - c)
                } else {
                    0.0
                }
            }
            MembershipKind::TrapezoidCircular => {
                let (rise, plateau, fall) = self.arcs();
                let t = (x - self.a).rem_euclid(360.0);
                if t < rise {
                    t / rise
                } else if t <= rise + plateau {
                    1.0
                } else if t < rise + plateau + fall {
                    1.0 - (t - rise - plateau) / fall
                } else {
                    0.0
                }
            }
        }
    }

    /// Centroid of the area under the membership function. Circular
    /// centroids are reported in `[0, 360)`.
    pub fn centroid(&self) -> f64 {
        let (rise, plateau, fall) = match self.kind {
            MembershipKind::TrapezoidLinear => (self.b - self.a, self.c - self.b, self.d - self.c),
            MembershipKind::TrapezoidCircular => self.arcs(),
        };
        // Unrolled coordinates starting at `a`.
        let parts = [
            (rise / 2.0, 2.0 * rise / 3.0),
            (plateau, rise + plateau / 2.0),
            (fall / 2.0, rise + plateau + fall / 3.0),
        ];
        let area: f64 = parts.iter().map(|p| p.0).sum();
        let offset = if area > 0.0 {
            parts.iter().map(|(w, x)| w * x).sum::<f64>() / area
        } else {
            0.0
        };
        match self.kind {
            MembershipKind::TrapezoidLinear => self.a + offset,
            MembershipKind::TrapezoidCircular => (self.a + offset).rem_euclid(360.0),
        }
    }

    fn validate(&self, channel: Channel) -> std::result::Result<(), String> {
        let pts = [self.a, self.b, self.c, self.d];
        if pts.iter().any(|v| !v.is_finite()) {
            return Err("non-finite breakpoint".into());
        }
        match (self.kind, channel) {
            (MembershipKind::TrapezoidCircular, Channel::Unit) => {
                Err("circular membership is only valid for hue".into())
            }
            (MembershipKind::TrapezoidLinear, _) => {
                if !(self.a <= self.b && self.b <= self.c && self.c <= self.d) {
                    return Err(format!(
                        "breakpoints must satisfy a <= b <= c <= d, got {:?}",
                        pts
                    ));
                }
                let hi = if channel == Channel::Hue { 360.0 } else { 1.0 };
                if self.a < 0.0 || self.d > hi {
                    return Err(format!("breakpoints outside [0, {hi}]: {pts:?}"));
                }
                Ok(())
            }
            (MembershipKind::TrapezoidCircular, Channel::Hue) => {
                let (rise, plateau, fall) = self.arcs();
                if rise + plateau + fall > 360.0 {
                    return Err(format!("circular support exceeds 360 degrees: {pts:?}"));
                }
                Ok(())
            }
        }
    }
}

/// One fuzzy color category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyColor {
    pub id: ColorId,
    pub name: String,
    pub achromatic: bool,
    pub hue: ChannelMembership,
    #[serde(rename = "sat")]
    pub saturation: ChannelMembership,
    #[serde(rename = "int")]
    pub intensity: ChannelMembership,
}

impl FuzzyColor {
    /// Degree to which `p` belongs to this color (min t-norm over channels).
    pub fn membership(&self, p: HsiPixel) -> f64 {
        let i = self.intensity.eval(p.i);
        if i <= 0.0 {
            return 0.0;
        }
        let s = self.saturation.eval(p.s);
        if s <= 0.0 {
            return 0.0;
        }
        let h = if self.achromatic || p.s < ACHROMATIC_SATURATION {
            1.0
        } else {
            self.hue.eval(p.h)
        };
        i.min(s).min(h)
    }

    /// Membership centroid. Achromatic colors sit on the gray axis (`s = 0`).
    pub fn centroid(&self) -> HsiPixel {
        if self.achromatic {
            HsiPixel {
                h: 0.0,
                s: 0.0,
                i: self.intensity.centroid(),
            }
        } else {
            HsiPixel {
                h: self.hue.centroid(),
                s: self.saturation.centroid(),
                i: self.intensity.centroid(),
            }
        }
    }

    /// Swatch color for display.
    pub fn representative_rgb(&self) -> [u8; 3] {
        hsi_to_rgb(self.centroid())
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidColor {
            color_id: self.id,
            reason,
        };
        self.hue
            .validate(Channel::Hue)
            .map_err(|r| bad(format!("hue: {r}")))?;
        self.saturation
            .validate(Channel::Unit)
            .map_err(|r| bad(format!("sat: {r}")))?;
        self.intensity
            .validate(Channel::Unit)
            .map_err(|r| bad(format!("int: {r}")))?;
        if self.achromatic && self.hue != ChannelMembership::full_hue() {
            return Err(bad("achromatic colors must use the full-circle hue membership".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionSource {
    DefaultGenerated,
    File,
}

/// An immutable fuzzy partition of HSI space.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    version: String,
    source: PartitionSource,
    colors: Vec<FuzzyColor>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    version: String,
    colors: Vec<FuzzyColor>,
}

/// Sample grid used to check the coverage invariant: 36 hues x 10
/// saturations x 10 intensities.
pub fn coverage_grid() -> impl Iterator<Item = HsiPixel> {
    (0..36).flat_map(|hk| {
        (0..10).flat_map(move |sk| {
            (0..10).map(move |ik| HsiPixel {
                h: hk as f64 * 10.0,
                s: sk as f64 / 9.0,
                i: ik as f64 / 9.0,
            })
        })
    })
}

impl Partition {
    /// Build a partition, enforcing id contiguity, per-color breakpoint
    /// validity and grid coverage.
    pub fn new(version: impl Into<String>, source: PartitionSource, mut colors: Vec<FuzzyColor>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::Empty("partition colors"));
        }
        colors.sort_by_key(|c| c.id);
        for pair in colors.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateColor(pair[0].id));
            }
        }
        for (k, color) in colors.iter().enumerate() {
            if color.id as usize != k {
                return Err(Error::InvalidColor {
                    color_id: color.id,
                    reason: format!("ids must be contiguous from 0; expected {k}"),
                });
            }
            color.validate()?;
        }
        let partition = Self {
            version: version.into(),
            source,
            colors,
        };
        if let Some(p) = partition.first_uncovered_point() {
            return Err(Error::invalid(
                "partition",
                format!("coverage below 0.5 at h={:.1} s={:.3} i={:.3}", p.h, p.s, p.i),
            ));
        }
        Ok(partition)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn source(&self) -> PartitionSource {
        self.source
    }

    pub fn colors(&self) -> &[FuzzyColor] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn get(&self, id: ColorId) -> Option<&FuzzyColor> {
        self.colors.get(id as usize)
    }

    pub fn contains(&self, id: ColorId) -> bool {
        (id as usize) < self.colors.len()
    }

    /// Write membership degrees of `p` in every color into `out`.
    pub fn memberships_into(&self, p: HsiPixel, out: &mut [f64]) {
        for (slot, color) in out.iter_mut().zip(&self.colors) {
            *slot = color.membership(p);
        }
    }

    pub fn max_membership(&self, p: HsiPixel) -> f64 {
        self.colors
            .iter()
            .map(|c| c.membership(p))
            .fold(0.0, f64::max)
    }

    /// Id of the color with the highest membership. Ties go to achromatic
    /// colors first (near-gray pixels reach full membership in every
    /// low-saturation hue), then to the lowest id.
    pub fn classify(&self, p: HsiPixel) -> ColorId {
        let mut best = (0, f64::NEG_INFINITY, false);
        for c in &self.colors {
            let m = c.membership(p);
            if m > best.1 || (m == best.1 && c.achromatic && !best.2) {
                best = (c.id, m, c.achromatic);
            }
        }
        best.0
    }

    fn first_uncovered_point(&self) -> Option<HsiPixel> {
        coverage_grid().find(|&p| self.max_membership(p) < 0.5)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PartitionFile {
            version: self.version.clone(),
            colors: self.colors.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PartitionFile = serde_json::from_str(text)?;
        Self::new(file.version, PartitionSource::File, file.colors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Load and validate a partition file.
pub fn load_partition(path: impl AsRef<Path>) -> Result<Partition> {
    let text = fs::read_to_string(path.as_ref())?;
    Partition::from_json(&text)
}

const HUE_FAMILIES: [&str; 10] = [
    "red", "orange", "yellow", "lime", "green", "cyan", "azure", "blue", "violet", "magenta",
];
const HUE_STEP: f64 = 36.0;
const HUE_HALF_OVERLAP: f64 = 6.0;

const SAT_BANDS: [&str; 3] = ["grayish", "muted", "vivid"];
const SAT_EDGES: [f64; 2] = [0.25, 0.5625];

const INT_BANDS: [&str; 3] = ["dark", "medium", "light"];
/// Black/dark, dark/medium and medium/light crossings.
const INT_EDGES: [f64; 3] = [0.125, 0.375, 0.6875];

const HALF_OVERLAP: f64 = 1.0 / 32.0;

/// Trapezoids for consecutive bands on `[0, 1]` crossing at 0.5 on each edge.
fn unit_band(lower_edge: Option<f64>, upper_edge: Option<f64>) -> ChannelMembership {
    let (a, b) = match lower_edge {
        Some(e) => (e - HALF_OVERLAP, e + HALF_OVERLAP),
        None => (0.0, 0.0),
    };
    let (c, d) = match upper_edge {
        Some(e) => (e - HALF_OVERLAP, e + HALF_OVERLAP),
        None => (1.0, 1.0),
    };
    ChannelMembership::linear(a, b, c, d)
}

/// The built-in 92-color partition.
///
/// Ids `0..90` are chromatic, laid out as `hue * 9 + sat * 3 + int`; id 90
/// is black and id 91 is white. Neighboring trapezoids cross at exactly 0.5.
pub fn default_partition() -> Partition {
    let mut colors = Vec::with_capacity(DEFAULT_COLOR_COUNT);
    for (hk, family) in HUE_FAMILIES.iter().enumerate() {
        let center = hk as f64 * HUE_STEP;
        let half = HUE_STEP / 2.0;
        let hue = ChannelMembership::circular(
            center - half - HUE_HALF_OVERLAP,
            center - half + HUE_HALF_OVERLAP,
            center + half - HUE_HALF_OVERLAP,
            center + half + HUE_HALF_OVERLAP,
        );
        for (sk, sat_name) in SAT_BANDS.iter().enumerate() {
            let saturation = unit_band(
                sk.checked_sub(1).map(|k| SAT_EDGES[k]),
                SAT_EDGES.get(sk).copied(),
            );
            for (ik, int_name) in INT_BANDS.iter().enumerate() {
                let intensity = unit_band(Some(INT_EDGES[ik]), INT_EDGES.get(ik + 1).copied());
                colors.push(FuzzyColor {
                    id: (hk * 9 + sk * 3 + ik) as ColorId,
                    name: format!("{int_name} {sat_name} {family}"),
                    achromatic: false,
                    hue,
                    saturation,
                    intensity,
                });
            }
        }
    }
    colors.push(FuzzyColor {
        id: 90,
        name: "black".into(),
        achromatic: true,
        hue: ChannelMembership::full_hue(),
        saturation: ChannelMembership::linear(0.0, 0.0, 1.0, 1.0),
        intensity: unit_band(None, Some(INT_EDGES[0])),
    });
    colors.push(FuzzyColor {
        id: 91,
        name: "white".into(),
        achromatic: true,
        hue: ChannelMembership::full_hue(),
        saturation: unit_band(None, Some(0.15625)),
        intensity: unit_band(Some(0.84375), None),
    });
    Partition::new("fhsi-default-92/1", PartitionSource::DefaultGenerated, colors)
        .expect("default partition satisfies its invariants")
}
