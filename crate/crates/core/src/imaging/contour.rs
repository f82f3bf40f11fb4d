//! Outer-boundary tracing of 8-connected components.

use super::components::ConnectedComponent;
use super::raster::BinaryImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: usize,
    pub y: usize,
}

impl Point {
    pub fn new(x: usize, y: usize) -> Self {
        Point { x, y }
    }

    pub fn dist2(&self, other: &Point) -> u64 {
        let dx = self.x.abs_diff(other.x) as u64;
        let dy = self.y.abs_diff(other.y) as u64;
        dx * dx + dy * dy
    }

    pub fn is_8_neighbor(&self, other: &Point) -> bool {
        self != other && self.x.abs_diff(other.x) <= 1 && self.y.abs_diff(other.y) <= 1
    }
}

/// Closed outer boundary. The last point is an 8-neighbor of the first
/// (a single-point contour is degenerate but closed). Points may repeat
/// where the component is one pixel thick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<Point>,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// Clockwise on screen (y grows downward), starting east.
const DIRS: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const WEST: usize = 4;

/// Moore-neighbor tracing of the outer boundary of `component`, starting at
/// its top-left pixel and stopping when the initial edge is revisited.
///
/// Any 8-neighbor of a component pixel with the component's value belongs to
/// the component, so membership is a plain value test against `img`.
pub fn trace_contour(component: &ConnectedComponent, img: &BinaryImage) -> Contour {
    let (w, h) = img.dims();
    let value = component.value;
    let inside = |p: Point, d: usize| -> Option<Point> {
        let (dx, dy) = DIRS[d];
        let x = p.x as isize + dx;
        let y = p.y as isize + dy;
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            return None;
        }
        let q = Point::new(x as usize, y as usize);
        (img.get(q.x, q.y) == value).then_some(q)
    };

    let (sx, sy) = component.first_pixel();
    let start = Point::new(sx, sy);

    // first set pixel clockwise from the west neighbor
    let Some((first_dir, first)) = (0..8)
        .map(|k| (WEST + k) % 8)
        .find_map(|d| inside(start, d).map(|q| (d, q)))
    else {
        return Contour { points: vec![start] };
    };

    let mut points = vec![start];
    let mut current = start;
    // direction from `current` to the previously examined boundary pixel
    let mut back = first_dir;
    let limit = 4 * component.area + 8;
    loop {
        let mut next = None;
        for k in 1..=8 {
            let d = (back + 8 - k) % 8;
            if let Some(q) = inside(current, d) {
                next = Some((d, q));
                break;
            }
        }
        let (d, q) = next.expect("non-isolated component always has a neighbor");
        if q == start && current == first {
            break;
        }
        points.push(q);
        back = (d + 4) % 8;
        current = q;
        if points.len() > limit {
            // unreachable for well-formed input
            break;
        }
    }
    Contour { points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::components::connected_components;

    fn rows(rows: &[&str]) -> BinaryImage {
        BinaryImage::from_fn(rows[0].len(), rows.len(), |x, y| rows[y].as_bytes()[x] == b'#').unwrap()
    }

    fn trace_first(img: &BinaryImage) -> Contour {
        let comps = connected_components(img, 1);
        trace_contour(&comps[0], img)
    }

    #[test]
    fn single_pixel() {
        let img = rows(&["...", ".#.", "..."]);
        assert_eq!(trace_first(&img).points, vec![Point::new(1, 1)]);
    }

    #[test]
    fn three_by_three_square_has_eight_points() {
        let img = rows(&[".....", ".###.", ".###.", ".###.", "....."]);
        let c = trace_first(&img);
        assert_eq!(c.len(), 8);
        assert!(!c.points.contains(&Point::new(2, 2)));
        let mut sorted = c.points.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
    }

    #[test]
    fn square_at_image_corner() {
        let img = rows(&["###", "###", "###"]);
        assert_eq!(trace_first(&img).len(), 8);
    }

    #[test]
    fn thin_line_goes_out_and_back() {
        let img = rows(&["....", "###.", "...."]);
        let c = trace_first(&img);
        assert_eq!(c.points, vec![Point::new(0, 1), Point::new(1, 1), Point::new(2, 1), Point::new(1, 1)]);
    }

    #[test]
    fn consecutive_points_are_neighbors() {
        let img = rows(&["..#...", ".###..", "##.##.", ".#..#.", ".####.", "...#.#"]);
        let c = trace_first(&img);
        for pair in c.points.windows(2) {
            assert!(pair[0].is_8_neighbor(&pair[1]));
        }
        assert!(c.points.last().unwrap().is_8_neighbor(&c.points[0]));
    }

    #[test]
    fn traces_zero_valued_components() {
        let img = rows(&["####", "#..#", "####"]);
        let holes = connected_components(&img, 0);
        assert_eq!(holes.len(), 1);
        let c = trace_contour(&holes[0], &img);
        assert_eq!(c.points, vec![Point::new(1, 1), Point::new(2, 1)]);
    }
}
