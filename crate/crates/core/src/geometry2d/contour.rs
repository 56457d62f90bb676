//! Border following with hole hierarchy (Suzuki-Abe), 8-connected foreground.

use super::{signed_area, BinaryMask, GeometryError};
use nalgebra::Point2;

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Pixel centers in tracing order; the ring closes from last to first.
    pub points: Vec<(usize, usize)>,
    pub is_hole: bool,
    /// Index of the enclosing contour in the returned list.
    pub parent: Option<usize>,
    /// Set on the largest-area outer contour.
    pub is_object: bool,
}

impl Contour {
    pub fn to_points(&self) -> Vec<Point2<f64>> {
        self.points.iter().map(|&(x, y)| Point2::new(x as f64, y as f64)).collect()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.to_points())
    }
}

// Counter-clockwise on screen (row axis pointing down), starting east.
const DIRS: [(isize, isize); 8] = [(0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1)];

fn dir_index(from: (usize, usize), to: (usize, usize)) -> usize {
    let d = (to.0 as isize - from.0 as isize, to.1 as isize - from.1 as isize);
    DIRS.iter().position(|&x| x == d).expect("pixels are 8-neighbors")
}

struct Border {
    points: Vec<(usize, usize)>,
    is_hole: bool,
    parent: usize,
}

/// Traces every outer border and hole border of the mask.
///
/// Outer contours are returned counter-clockwise (positive shoelace area in
/// pixel coordinates) and holes clockwise. Borders with fewer than three
/// points (isolated specks and two-pixel blobs) are dropped.
pub fn extract_contours(mask: &BinaryMask) -> Result<Vec<Contour>, GeometryError> {
    if mask.count() == 0 {
        return Err(GeometryError::EmptyMask);
    }
    let (w, h) = (mask.width() + 2, mask.height() + 2);
    let mut f = vec![0i32; w * h];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                f[(y + 1) * w + x + 1] = 1;
            }
        }
    }
    let at = |i: usize, j: usize| i * w + j;

    // Border 1 is the frame; borders are numbered from 2 upwards.
    let mut borders: Vec<Border> = vec![Border { points: vec![], is_hole: true, parent: 0 }];
    let mut nbd: i32 = 1;

    for i in 1..h - 1 {
        let mut lnbd: i32 = 1;
        for j in 1..w - 1 {
            let fij = f[at(i, j)];
            let start = if fij == 1 && f[at(i, j - 1)] == 0 {
                Some((false, (i, j - 1)))
            } else if fij >= 1 && f[at(i, j + 1)] == 0 {
                if fij > 1 {
                    lnbd = fij;
                }
                Some((true, (i, j + 1)))
            } else {
                None
            };

            if let Some((is_hole, from)) = start {
                nbd += 1;
                let prev = &borders[(lnbd - 1) as usize];
                let parent = if is_hole == prev.is_hole { prev.parent } else { (lnbd - 1) as usize };
                let points = follow(&mut f, w, (i, j), from, nbd);
                borders.push(Border { points, is_hole, parent });
            }

            let fij = f[at(i, j)];
            if fij != 0 && fij != 1 {
                lnbd = fij.abs();
            }
        }
    }

    // Drop degenerate borders, remapping parents to the nearest kept ancestor.
    let keep: Vec<bool> = borders.iter().enumerate().map(|(k, b)| k > 0 && b.points.len() >= 3).collect();
    let mut index = vec![None; borders.len()];
    let mut out = Vec::new();
    for (k, b) in borders.iter().enumerate() {
        if keep[k] {
            index[k] = Some(out.len());
            let mut parent = b.parent;
            while parent != 0 && !keep[parent] {
                parent = borders[parent].parent;
            }
            let mut points: Vec<(usize, usize)> = b.points.iter().map(|&(r, c)| (c - 1, r - 1)).collect();
            let area = signed_area(&points.iter().map(|&(x, y)| Point2::new(x as f64, y as f64)).collect::<Vec<_>>());
            if (area < 0.0) != b.is_hole {
                points.reverse();
            }
            out.push((Contour { points, is_hole: b.is_hole, parent: None, is_object: false }, parent));
        }
    }
    let mut contours: Vec<Contour> = out
        .into_iter()
        .map(|(mut c, parent)| {
            c.parent = if parent == 0 { None } else { index[parent] };
            c
        })
        .collect();

    let object = contours
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_hole)
        .map(|(k, c)| (k, c.area().abs()))
        .fold(None, |best: Option<(usize, f64)>, (k, a)| match best {
            Some((_, ba)) if ba >= a => best,
            _ => Some((k, a)),
        });
    if let Some((k, _)) = object {
        contours[k].is_object = true;
    }
    Ok(contours)
}

fn follow(f: &mut [i32], w: usize, start: (usize, usize), from: (usize, usize), nbd: i32) -> Vec<(usize, usize)> {
    let at = |p: (usize, usize)| p.0 * w + p.1;
    let step = |p: (usize, usize), d: usize| {
        let (di, dj) = DIRS[d % 8];
        ((p.0 as isize + di) as usize, (p.1 as isize + dj) as usize)
    };

    // Clockwise search from `from` for the first nonzero neighbor.
    let d0 = dir_index(start, from);
    let first = (0..8).map(|k| step(start, d0 + 8 - k)).find(|&p| f[at(p)] != 0);
    let Some(p1) = first else {
        f[at(start)] = -nbd;
        return vec![start];
    };

    let mut points = vec![];
    let mut p2 = p1;
    let mut p3 = start;
    loop {
        points.push(p3);
        // Counter-clockwise search around p3 starting after p2.
        let d2 = dir_index(p3, p2);
        let mut east_zero = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let d = (d2 + k) % 8;
            let q = step(p3, d);
            if f[at(q)] != 0 {
                p4 = q;
                break;
            }
            if d == 0 {
                east_zero = true;
            }
        }
        if east_zero {
            f[at(p3)] = -nbd;
        } else if f[at(p3)] == 1 {
            f[at(p3)] = nbd;
        }
        if p4 == start && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    points
}
