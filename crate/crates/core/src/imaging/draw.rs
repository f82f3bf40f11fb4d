use super::contour::Point;
use super::raster::BinaryImage;

/// Bresenham segment from `p0` to `p1` inclusive. Both endpoints must lie
/// inside the image; the rasterized pixels form an 8-connected path.
pub fn draw_line(img: &mut BinaryImage, p0: Point, p1: Point, value: u8) {
    let (mut x, mut y) = (p0.x as isize, p0.y as isize);
    let (x1, y1) = (p1.x as isize, p1.y as isize);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.set(x as usize, y as usize, value);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_segment_sets_one_pixel() {
        let mut img = BinaryImage::new(5, 5).unwrap();
        draw_line(&mut img, Point::new(2, 3), Point::new(2, 3), 1);
        assert_eq!(img.count_ones(), 1);
        assert!(img.is_set(2, 3));
    }

    #[test]
    fn horizontal_row() {
        let mut img = BinaryImage::new(10, 10).unwrap();
        draw_line(&mut img, Point::new(0, 5), Point::new(9, 5), 1);
        assert_eq!(img.count_ones(), 10);
        assert!((0..10).all(|x| img.is_set(x, 5)));
    }

    #[test]
    fn erases_with_zero() {
        let mut img = BinaryImage::filled(6, 6, 1).unwrap();
        draw_line(&mut img, Point::new(0, 0), Point::new(5, 5), 0);
        assert_eq!(img.count_ones(), 30);
    }
}
