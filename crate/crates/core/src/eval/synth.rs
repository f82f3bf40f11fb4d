//! Synthetic orchard scenes with exact ground truth.
//!
//! A scene is a blue panel, a branching tree drawn as capsule strokes in
//! front of it (optionally with foliage ellipses and flower discs) and
//! vegetation texture around the panel. Shapes are rendered with a one-pixel
//! linear coverage ramp; a pixel is tree in the ground truth when its center
//! lies inside a shape and inside the panel.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, Rect, RgbImage};

/// Capsule: all points within `radius` of the segment `a`-`b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stroke {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub radius: f64,
}

impl Stroke {
    pub fn length(&self) -> f64 {
        ((self.b[0] - self.a[0]).powi(2) + (self.b[1] - self.a[1]).powi(2)).sqrt()
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        point_segment_distance(p, self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Material {
    Foliage,
    Flower,
}

/// Axis-aligned ellipse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blob {
    pub center: [f64; 2],
    pub rx: f64,
    pub ry: f64,
    pub material: Material,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeParams {
    /// Foot of the trunk.
    pub base: [f64; 2],
    pub trunk_length: f64,
    pub trunk_radius: f64,
    /// Branching levels above the trunk.
    pub depth: usize,
    /// Angle between outermost sibling branches, degrees.
    pub spread_deg: f64,
    pub foliage: usize,
    pub flowers: usize,
}

/// Part of the panel in a second shade of blue.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondaryPanel {
    pub hue: f64,
    pub region: Rect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub panel: Rect,
    /// Panel hue in half degrees.
    pub panel_hue: f64,
    /// Amplitude of the smooth hue variation across the panel, half degrees.
    pub hue_spread: f64,
    pub panel_saturation: f64,
    pub panel_value: f64,
    pub secondary: Option<SecondaryPanel>,
    /// Global brightness factor in (0, 1].
    pub gray_level: f64,
    /// Brightness falls linearly from 1 at the left edge to `1 - ramp` at the right.
    pub ramp: f64,
    /// Standard deviation of per-channel Gaussian noise, in 8-bit levels.
    pub noise: f64,
    /// Vegetation texture outside the panel (dark gray otherwise).
    pub environment: bool,
    pub tree: TreeParams,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            width: 640,
            height: 480,
            panel: Rect { x0: 40, y0: 30, x1: 599, y1: 479 },
            panel_hue: 120.0,
            hue_spread: 2.0,
            panel_saturation: 0.75,
            panel_value: 0.75,
            secondary: None,
            gray_level: 1.0,
            ramp: 0.0,
            noise: 2.0,
            environment: true,
            tree: TreeParams {
                base: [320.0, 430.0],
                trunk_length: 120.0,
                trunk_radius: 6.0,
                depth: 3,
                spread_deg: 60.0,
                foliage: 0,
                flowers: 0,
            },
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("scene: {m}")));
        if self.width < 16 || self.height < 16 {
            return bad("frame must be at least 16x16");
        }
        let p = self.panel;
        if p.x0 > p.x1 || p.y0 > p.y1 || p.x1 >= self.width || p.y1 >= self.height {
            return bad("panel must lie within the frame");
        }
        if let Some(s) = &self.secondary {
            let r = s.region;
            if r.x0 > r.x1 || r.y0 > r.y1 || !p.contains(r.x0, r.y0) || !p.contains(r.x1, r.y1) {
                return bad("secondary region must lie within the panel");
            }
        }
        if !(self.tree.trunk_radius >= 0.5) || !(self.tree.trunk_length > 0.0) {
            return bad("stroke width must be at least 1 pixel");
        }
        let [bx, by] = self.tree.base;
        if !(bx >= p.x0 as f64 && bx <= p.x1 as f64 && by >= p.y0 as f64 && by <= p.y1 as f64) {
            return bad("tree base must lie on the panel");
        }
        if !(self.gray_level > 0.0 && self.gray_level <= 1.0) || !(0.0..1.0).contains(&self.ramp) {
            return bad("gray_level must be in (0, 1] and ramp in [0, 1)");
        }
        if !(self.noise >= 0.0) || !(self.hue_spread >= 0.0) {
            return bad("noise and hue spread must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub image: RgbImage,
    pub truth: BinaryImage,
    pub params: SceneParams,
    pub strokes: Vec<Stroke>,
    /// Stroke indices whose far end carries no child.
    pub tips: Vec<usize>,
    pub blobs: Vec<Blob>,
}

impl SyntheticScene {
    /// Tree area from the shape list: stroke bodies, the trunk foot and free
    /// tips as half discs, and the blob areas. Overlap at forks is ignored.
    pub fn analytic_area(&self) -> f64 {
        let bodies: f64 = self.strokes.iter().map(|s| 2.0 * s.radius * s.length()).sum();
        let foot = self.strokes.first().map_or(0.0, |s| PI * s.radius * s.radius / 2.0);
        let tips: f64 = self.tips.iter().map(|&i| PI * self.strokes[i].radius.powi(2) / 2.0).sum();
        let blobs: f64 = self.blobs.iter().map(|b| PI * b.rx * b.ry).sum();
        bodies + foot + tips + blobs
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (qx * qx + qy * qy).sqrt()
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn segment_distance(s: &Stroke, t: &Stroke) -> f64 {
    if segments_cross(s.a, s.b, t.a, t.b) {
        return 0.0;
    }
    s.distance(t.a).min(s.distance(t.b)).min(t.distance(s.a)).min(t.distance(s.b))
}

struct Grower<'a> {
    rng: &'a mut ChaCha8Rng,
    bounds: [f64; 4],
    strokes: Vec<Stroke>,
    /// Index of the stroke each stroke grew from.
    parent: Vec<Option<usize>>,
    children: Vec<usize>,
    spread: f64,
}

const MARGIN: f64 = 12.0;
const CLEARANCE: f64 = 3.0;

impl Grower<'_> {
    fn inside(&self, s: &Stroke) -> bool {
        let [x0, y0, x1, y1] = self.bounds;
        [s.a, s.b].iter().all(|p| p[0] - s.radius >= x0 && p[0] + s.radius <= x1 && p[1] - s.radius >= y0 && p[1] + s.radius <= y1)
    }

    /// No contact with strokes other than those meeting at the fork.
    fn clear(&self, s: &Stroke, parent: usize) -> bool {
        self.strokes.iter().enumerate().all(|(i, t)| {
            i == parent || self.parent[i] == Some(parent) || segment_distance(s, t) > s.radius + t.radius + CLEARANCE
        })
    }

    fn grow(&mut self, parent: usize, angle: f64, length: f64, radius: f64, depth: usize) {
        let from = self.strokes[parent].b;
        let n = if depth >= 2 && self.rng.random_bool(0.4) { 3 } else { 2 };
        for c in 0..n {
            let offset = if n == 2 { [-0.5, 0.5][c] } else { [-0.6, 0.0, 0.6][c] } * self.spread;
            let child_r = (radius * self.rng.random_range(0.58..0.75)).max(1.0);
            let mut child_len = length * self.rng.random_range(0.62..0.82);
            for _attempt in 0..6 {
                let jitter = self.rng.random_range(-8.0f64..8.0).to_radians();
                let a = (angle + offset + jitter).clamp(-PI + 0.25, -0.25);
                let r = child_r.min(child_len / 12.0);
                let s = Stroke { a: from, b: [from[0] + child_len * a.cos(), from[1] + child_len * a.sin()], radius: r };
                if r >= 1.0 && self.inside(&s) && self.clear(&s, parent) {
                    let id = self.strokes.len();
                    self.strokes.push(s);
                    self.parent.push(Some(parent));
                    self.children.push(0);
                    self.children[parent] += 1;
                    if depth > 1 {
                        self.grow(id, a, child_len, r, depth - 1);
                    }
                    break;
                }
                child_len *= 0.8;
            }
        }
    }
}

fn build_tree(params: &SceneParams, rng: &mut ChaCha8Rng) -> (Vec<Stroke>, Vec<usize>) {
    let t = &params.tree;
    let p = params.panel;
    let bounds = [p.x0 as f64 + MARGIN, p.y0 as f64 + MARGIN, p.x1 as f64 - MARGIN, p.y1 as f64 - MARGIN];
    let angle = -PI / 2.0 + rng.random_range(-4.0f64..4.0).to_radians();
    let trunk = Stroke {
        a: t.base,
        b: [t.base[0] + t.trunk_length * angle.cos(), t.base[1] + t.trunk_length * angle.sin()],
        radius: t.trunk_radius,
    };
    let mut g = Grower {
        rng,
        bounds,
        strokes: vec![trunk],
        parent: vec![None],
        children: vec![0],
        spread: t.spread_deg.to_radians(),
    };
    if t.depth > 0 {
        g.grow(0, angle, t.trunk_length, t.trunk_radius, t.depth);
    }
    let tips = (0..g.strokes.len()).filter(|&i| g.children[i] == 0).collect();
    (g.strokes, tips)
}

fn place_blobs(params: &SceneParams, strokes: &[Stroke], tips: &[usize], rng: &mut ChaCha8Rng) -> Vec<Blob> {
    let p = params.panel;
    let mut blobs: Vec<Blob> = Vec::new();
    let wanted = [(Material::Foliage, params.tree.foliage), (Material::Flower, params.tree.flowers)];
    if strokes.len() < 2 {
        return blobs;
    }
    for (material, count) in wanted {
        for _ in 0..count {
            for _attempt in 0..40 {
                let (rx, ry): (f64, f64) = match material {
                    Material::Foliage => (rng.random_range(10.0..22.0), rng.random_range(6.0..12.0)),
                    Material::Flower => {
                        let r = rng.random_range(3.5..6.5);
                        (r, r)
                    }
                };
                // flowers cluster around tips, leaves anywhere along branches
                let s = match material {
                    Material::Flower => &strokes[tips[rng.random_range(0..tips.len())]],
                    Material::Foliage => &strokes[rng.random_range(1..strokes.len())],
                };
                let u = rng.random_range(0.3..1.0);
                let at = [s.a[0] + u * (s.b[0] - s.a[0]), s.a[1] + u * (s.b[1] - s.a[1])];
                let dir = rng.random_range(0.0..2.0 * PI);
                let reach = s.radius + rx.max(ry) + CLEARANCE + rng.random_range(0.0..10.0);
                let c = [at[0] + reach * dir.cos(), at[1] + reach * dir.sin()];
                let big = rx.max(ry);
                let inside = c[0] - rx >= p.x0 as f64 + MARGIN
                    && c[0] + rx <= p.x1 as f64 - MARGIN
                    && c[1] - ry >= p.y0 as f64 + MARGIN
                    && c[1] + ry <= p.y1 as f64 - MARGIN;
                let clear = strokes.iter().all(|t| t.distance(c) > t.radius + big + CLEARANCE)
                    && blobs.iter().all(|b| {
                        let d = ((b.center[0] - c[0]).powi(2) + (b.center[1] - c[1]).powi(2)).sqrt();
                        d > b.rx.max(b.ry) + big + CLEARANCE
                    });
                if inside && clear {
                    blobs.push(Blob { center: c, rx, ry, material });
                    break;
                }
            }
        }
    }
    blobs
}

/// RGB in [0, 1] from hue in degrees.
fn hsv(hue_deg: f64, s: f64, v: f64) -> [f64; 3] {
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Smooth field in [-1, 1] from a few random plane waves.
#[derive(Clone)]
struct Waves(Vec<(f64, f64, f64)>);

impl Waves {
    fn new(rng: &mut ChaCha8Rng, count: usize, wavelength: std::ops::Range<f64>) -> Self {
        Waves(
            (0..count)
                .map(|_| {
                    let theta = rng.random_range(0.0..PI);
                    let k = 2.0 * PI / rng.random_range(wavelength.clone());
                    (k * theta.cos(), k * theta.sin(), rng.random_range(0.0..2.0 * PI))
                })
                .collect(),
        )
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.0.iter().map(|(kx, ky, ph)| (kx * x + ky * y + ph).sin()).sum::<f64>() / self.0.len() as f64
    }
}

/// Coverage buffer: best coverage so far and the color that produced it.
struct Canvas {
    w: usize,
    h: usize,
    cover: Vec<f32>,
    color: Vec<[f32; 3]>,
    truth: Vec<u8>,
}

impl Canvas {
    /// `sd` returns (signed distance, inside) for a pixel center.
    fn paint(&mut self, bbox: [f64; 4], color: [f64; 3], sd: impl Fn(f64, f64) -> (f64, bool)) {
        let x0 = (bbox[0] - 1.0).floor().max(0.0) as usize;
        let y0 = (bbox[1] - 1.0).floor().max(0.0) as usize;
        let x1 = ((bbox[2] + 1.0).ceil().max(0.0) as usize).min(self.w - 1);
        let y1 = ((bbox[3] + 1.0).ceil().max(0.0) as usize).min(self.h - 1);
        let color = color.map(|c| c as f32);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (d, inside) = sd(x as f64, y as f64);
                let cov = (0.5 - d).clamp(0.0, 1.0) as f32;
                let i = y * self.w + x;
                if inside {
                    self.truth[i] = 1;
                }
                if cov > self.cover[i] {
                    self.cover[i] = cov;
                    self.color[i] = color;
                }
            }
        }
    }
}

pub fn generate_scene(params: &SceneParams, seed: u64) -> Result<SyntheticScene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width, params.height);
    let (strokes, tips) = build_tree(params, &mut rng);
    let blobs = place_blobs(params, &strokes, &tips, &mut rng);

    let mut canvas =
        Canvas { w, h, cover: vec![0.0; w * h], color: vec![[0.0; 3]; w * h], truth: vec![0; w * h] };
    for (i, s) in strokes.iter().enumerate() {
        let darker = if i == 0 { 0.85 } else { 1.0 };
        let color = hsv(
            rng.random_range(18.0..32.0),
            rng.random_range(0.35..0.55),
            rng.random_range(0.30..0.45) * darker,
        );
        let bbox = [
            s.a[0].min(s.b[0]) - s.radius,
            s.a[1].min(s.b[1]) - s.radius,
            s.a[0].max(s.b[0]) + s.radius,
            s.a[1].max(s.b[1]) + s.radius,
        ];
        canvas.paint(bbox, color, |x, y| {
            let d = s.distance([x, y]);
            (d - s.radius, d <= s.radius)
        });
    }
    for b in &blobs {
        let color = match b.material {
            Material::Foliage => hsv(rng.random_range(85.0..115.0), rng.random_range(0.55..0.7), rng.random_range(0.35..0.55)),
            Material::Flower => hsv(rng.random_range(325.0..345.0), rng.random_range(0.25..0.4), rng.random_range(0.9..1.0)),
        };
        let bbox = [b.center[0] - b.rx, b.center[1] - b.ry, b.center[0] + b.rx, b.center[1] + b.ry];
        canvas.paint(bbox, color, |x, y| {
            let (u, v) = ((x - b.center[0]) / b.rx, (y - b.center[1]) / b.ry);
            let q = (u * u + v * v).sqrt();
            if q == 0.0 {
                return (-b.rx.min(b.ry), true);
            }
            // first-order distance to the boundary q = 1
            let grad = ((u / b.rx).powi(2) + (v / b.ry).powi(2)).sqrt() / q;
            ((q - 1.0) / grad, q <= 1.0)
        });
    }

    let hue_field = Waves::new(&mut rng, 3, 300.0..700.0);
    let env = [
        Waves::new(&mut rng, 6, 20.0..140.0),
        Waves::new(&mut rng, 6, 15.0..90.0),
        Waves::new(&mut rng, 6, 10.0..60.0),
    ];
    let panel = params.panel;
    let background = |x: usize, y: usize| -> [f64; 3] {
        let (fx, fy) = (x as f64, y as f64);
        if panel.contains(x, y) {
            let base = match &params.secondary {
                Some(s) if s.region.contains(x, y) => s.hue,
                _ => params.panel_hue,
            };
            let hue = base + params.hue_spread * hue_field.at(fx, fy);
            hsv(2.0 * hue, params.panel_saturation, params.panel_value)
        } else if params.environment {
            let g = env.each_ref().map(|f| 0.5 + 0.5 * f.at(fx, fy));
            hsv(30.0 + 90.0 * g[0], 0.35 + 0.35 * g[1], 0.25 + 0.45 * g[2])
        } else {
            [0.3; 3]
        }
    };

    let mut data = vec![0u8; w * h * 3];
    data.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(y as u64 + 1)));
        for x in 0..w {
            let i = y * w + x;
            let bg = background(x, y);
            let cov = f64::from(canvas.cover[i]);
            let fg = canvas.color[i].map(f64::from);
            let light = params.gray_level * (1.0 - params.ramp * x as f64 / (w - 1) as f64);
            for c in 0..3 {
                let v = (cov * fg[c] + (1.0 - cov) * bg[c]) * light * 255.0;
                let n: f64 = if params.noise > 0.0 { noise_rng.sample::<f64, _>(StandardNormal) * params.noise } else { 0.0 };
                row[x * 3 + c] = (v + n).round().clamp(0.0, 255.0) as u8;
            }
        }
    });

    let truth: Vec<u8> =
        (0..w * h).map(|i| u8::from(canvas.truth[i] == 1 && panel.contains(i % w, i / w))).collect();
    Ok(SyntheticScene {
        image: RgbImage::from_vec(w, h, data)?,
        truth: BinaryImage::from_vec(w, h, truth)?,
        params: params.clone(),
        strokes,
        tips,
        blobs,
    })
}

/// Scene size of the default corpus.
pub const CORPUS_WIDTH: usize = 1900;
pub const CORPUS_HEIGHT: usize = 1200;

/// Twelve scenes: six small leafless trees on a panel that also covers the
/// ground, under strongly varying brightness, and six large trees with
/// foliage and flowers on a bigger panel. Scenes 2, 4, 6, 8, 10 and 12 have
/// an illumination ramp; scene 11 has a two-tone panel.
pub fn default_corpus_params() -> Vec<SceneParams> {
    let (w, h) = (CORPUS_WIDTH, CORPUS_HEIGHT);
    let mut out = Vec::new();
    let small_gray = [1.0, 0.75, 0.5, 0.42, 0.85, 0.6];
    let small_ramp = [0.0, 0.5, 0.0, 0.55, 0.0, 0.45];
    let small_x = [950.0, 820.0, 1080.0, 900.0, 1000.0, 760.0];
    for i in 0..6 {
        out.push(SceneParams {
            width: w,
            height: h,
            panel: Rect { x0: 200, y0: 80, x1: 1700, y1: h - 1 },
            panel_hue: 120.0 + [0.0, 2.0, -2.0, 1.0, -1.0, 3.0][i],
            hue_spread: 2.0,
            panel_saturation: 0.72,
            panel_value: 0.78,
            secondary: None,
            gray_level: small_gray[i],
            ramp: small_ramp[i],
            noise: 2.5,
            environment: true,
            tree: TreeParams {
                base: [small_x[i], 1060.0],
                trunk_length: 240.0 + 15.0 * i as f64,
                trunk_radius: 9.0 + (i % 3) as f64,
                depth: 4,
                spread_deg: 55.0 + 4.0 * i as f64,
                foliage: 0,
                flowers: 0,
            },
        });
    }
    let big_gray = [1.0, 0.9, 0.8, 0.95, 0.85, 0.9];
    let big_ramp = [0.0, 0.5, 0.0, 0.5, 0.0, 0.55];
    for i in 0..6 {
        let panel = Rect { x0: 60, y0: 40, x1: w - 61, y1: h - 41 };
        out.push(SceneParams {
            width: w,
            height: h,
            panel,
            panel_hue: 118.0 + i as f64,
            hue_spread: 2.5,
            panel_saturation: 0.7,
            panel_value: 0.8,
            secondary: (i == 4).then_some(SecondaryPanel {
                hue: 111.0,
                region: Rect { x0: panel.x0, y0: panel.y0, x1: panel.x1, y1: panel.y0 + 320 },
            }),
            gray_level: big_gray[i],
            ramp: big_ramp[i],
            noise: 2.5,
            environment: true,
            tree: TreeParams {
                base: [900.0 + 40.0 * i as f64, 1100.0],
                trunk_length: 330.0,
                trunk_radius: 15.0 + (i % 2) as f64 * 2.0,
                depth: 5,
                spread_deg: 60.0,
                foliage: 60,
                flowers: 80,
            },
        });
    }
    out
}

/// Seed of scene `index` derived from a corpus seed.
pub fn scene_seed(corpus_seed: u64, index: usize) -> u64 {
    corpus_seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(index as u64 + 1)
}

pub fn default_corpus(seed: u64) -> Result<Vec<SyntheticScene>> {
    default_corpus_params()
        .par_iter()
        .enumerate()
        .map(|(i, p)| generate_scene(p, scene_seed(seed, i)))
        .collect()
}
