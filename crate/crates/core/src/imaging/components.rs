//! 8-connected component labeling on binary planes.
//!
//! Components are extracted as horizontal runs and merged with a union-find
//! over runs of consecutive rows, so memory stays proportional to the number
//! of runs rather than pixels.

use super::raster::{BinaryImage, Rect};

/// Maximal horizontal span `[x0, x1]` on row `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[allow(clippy::len_without_is_empty)]
pub struct Run {
    pub y: usize,
    pub x0: usize,
    pub x1: usize,
}

impl Run {
    pub fn len(&self) -> usize {
        self.x1 - self.x0 + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectedComponent {
    /// 1-based id in raster order of each component's first pixel.
    pub label: u32,
    /// Pixel value the component was extracted for (0 or 1).
    pub value: u8,
    pub area: usize,
    pub bbox: Rect,
    /// Runs sorted by row, then column.
    pub runs: Vec<Run>,
}

impl ConnectedComponent {
    /// Top-most, then left-most pixel.
    pub fn first_pixel(&self) -> (usize, usize) {
        (self.runs[0].x0, self.runs[0].y)
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.runs.iter().flat_map(|r| (r.x0..=r.x1).map(move |x| (x, r.y)))
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // keep the earlier run as root so root order follows raster order
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Maximal 8-connected components of pixels equal to `foreground`.
pub fn connected_components(img: &BinaryImage, foreground: u8) -> Vec<ConnectedComponent> {
    let fg = u8::from(foreground != 0);
    let (w, h) = img.dims();
    let data = img.data();

    let mut runs: Vec<Run> = Vec::new();
    let mut row_start: Vec<usize> = Vec::with_capacity(h + 1);
    for y in 0..h {
        row_start.push(runs.len());
        let row = &data[y * w..(y + 1) * w];
        let mut x = 0;
        while x < w {
            if row[x] == fg {
                let x0 = x;
                while x < w && row[x] == fg {
                    x += 1;
                }
                runs.push(Run { y, x0, x1: x - 1 });
            } else {
                x += 1;
            }
        }
    }
    row_start.push(runs.len());
    if runs.is_empty() {
        return Vec::new();
    }

    let mut parent: Vec<usize> = (0..runs.len()).collect();
    for y in 1..h {
        let (prev_lo, prev_hi) = (row_start[y - 1], row_start[y]);
        let (cur_lo, cur_hi) = (row_start[y], row_start[y + 1]);
        let mut p = prev_lo;
        for c in cur_lo..cur_hi {
            let cur = runs[c];
            // skip previous-row runs entirely left of the 8-neighborhood
            while p < prev_hi && runs[p].x1 + 1 < cur.x0 {
                p += 1;
            }
            let mut q = p;
            while q < prev_hi && runs[q].x0 <= cur.x1 + 1 {
                union(&mut parent, c, q);
                q += 1;
            }
        }
    }

    let mut slot = vec![usize::MAX; runs.len()];
    let mut comps: Vec<ConnectedComponent> = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push(ConnectedComponent {
                label: comps.len() as u32 + 1,
                value: fg,
                area: 0,
                bbox: Rect::point(run.x0, run.y),
                runs: Vec::new(),
            });
        }
        let comp = &mut comps[slot[root]];
        comp.area += run.len();
        comp.bbox.include(run.x0, run.y);
        comp.bbox.include(run.x1, run.y);
        comp.runs.push(*run);
    }
    comps
}

/// Per-pixel component label (0 = not in any component).
pub fn label_map(components: &[ConnectedComponent], width: usize, height: usize) -> Vec<u32> {
    let mut labels = vec![0u32; width * height];
    for comp in components {
        for r in &comp.runs {
            labels[r.y * width + r.x0..=r.y * width + r.x1].fill(comp.label);
        }
    }
    labels
}

/// Writes `value` over every pixel of `comp`.
pub fn paint_component(img: &mut BinaryImage, comp: &ConnectedComponent, value: u8) {
    let w = img.width();
    for r in &comp.runs {
        for x in r.x0..=r.x1 {
            img.set_index(r.y * w + x, value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&str]) -> BinaryImage {
        let h = rows.len();
        let w = rows[0].len();
        BinaryImage::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#').unwrap()
    }

    #[test]
    fn empty_image_has_no_components() {
        let img = BinaryImage::new(8, 8).unwrap();
        assert!(connected_components(&img, 1).is_empty());
    }

    #[test]
    fn single_square() {
        let img = BinaryImage::from_fn(20, 20, |x, y| (5..15).contains(&x) && (3..13).contains(&y)).unwrap();
        let comps = connected_components(&img, 1);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area, 100);
        assert_eq!(comps[0].bbox, Rect { x0: 5, y0: 3, x1: 14, y1: 12 });
    }

    #[test]
    fn diagonal_touch_is_connected() {
        let img = from_rows(&["#..", ".#.", "..#"]);
        assert_eq!(connected_components(&img, 1).len(), 1);
        // the two background corners touch diagonally at (1,0)-(0,1)
        let bg = connected_components(&img, 0);
        assert_eq!(bg.len(), 1);
        assert_eq!(bg.iter().map(|c| c.area).sum::<usize>(), 6);
    }

    #[test]
    fn u_shape_merges_late() {
        let img = from_rows(&["#.#", "#.#", "###"]);
        let comps = connected_components(&img, 1);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area, 7);
        assert_eq!(comps[0].first_pixel(), (0, 0));
    }

    #[test]
    fn labels_follow_raster_order() {
        let img = from_rows(&["..#", "...", "#.."]);
        let comps = connected_components(&img, 1);
        assert_eq!(comps.iter().map(|c| c.first_pixel()).collect::<Vec<_>>(), vec![(2, 0), (0, 2)]);
        let lm = label_map(&comps, 3, 3);
        assert_eq!(lm[2], 1);
        assert_eq!(lm[6], 2);
    }
}
