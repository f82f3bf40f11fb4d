use std::collections::VecDeque;

use proptest::prelude::*;
use treeseg::imaging::{GrayImage, HsvImage, Rect};
use treeseg::superpixels::{init_grid, rectangular_subset, refine, SeedsConfig, SuperpixelPartition};

fn hsv(w: usize, h: usize, hue: Vec<u8>) -> HsvImage {
    HsvImage {
        hue: GrayImage::from_vec(w, h, hue).unwrap(),
        saturation: GrayImage::from_fn(w, h, |_, _| 200).unwrap(),
        value: GrayImage::from_fn(w, h, |_, _| 200).unwrap(),
    }
}

/// Checks that the partition is exhaustive, every superpixel is non-empty and
/// 4-connected, and the stored statistics match a recount.
fn assert_valid(p: &SuperpixelPartition, hue: &[u8]) {
    let (w, h) = p.dims();
    let labels = p.labels();
    assert_eq!(labels.len(), w * h);
    let n = p.len();
    let mut count = vec![0usize; n];
    let mut sum = vec![0u64; n];
    let mut sq = vec![0u64; n];
    let mut first = vec![None; n];
    for (i, &l) in labels.iter().enumerate() {
        let l = l as usize;
        assert!(l < n, "label {l} out of range");
        count[l] += 1;
        sum[l] += u64::from(hue[i]);
        sq[l] += u64::from(hue[i]).pow(2);
        first[l].get_or_insert(i);
    }
    assert_eq!(count.iter().sum::<usize>(), w * h);
    for id in 0..n {
        let c = p.cell(id as u32);
        assert!(count[id] > 0, "superpixel {id} is empty");
        assert_eq!((c.count, c.hue_sum, c.hue_sq_sum), (count[id], sum[id], sq[id]));
        // 4-connected flood from the first pixel reaches the whole superpixel
        let mut seen = vec![false; w * h];
        let start = first[id].unwrap();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut reached = 0;
        while let Some(i) = queue.pop_front() {
            reached += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !seen[j] && labels[j] as usize == id {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        assert_eq!(reached, count[id], "superpixel {id} is disconnected");
    }
}

/// Ids whose pixel set equals their initial rectangle, by direct comparison.
fn rectangular_oracle(p: &SuperpixelPartition) -> Vec<u32> {
    let w = p.width();
    (0..p.len() as u32)
        .filter(|&id| {
            let r = p.cell(id).initial;
            p.labels().iter().enumerate().all(|(i, &l)| {
                let inside = r.contains(i % w, i / w);
                inside == (l == id)
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Case {
    w: usize,
    h: usize,
    cfg: SeedsConfig,
    hue: Vec<u8>,
}

fn arb_case() -> impl Strategy<Value = Case> {
    (4usize..48, 4usize..40, 1usize..80, 0usize..6, 1usize..8).prop_flat_map(|(w, h, n, iters, bins)| {
        let n = n.min(w * h);
        prop::collection::vec(any::<u8>().prop_map(|v| v % 180), w * h).prop_map(move |hue| Case {
            w,
            h,
            cfg: SeedsConfig { num_superpixels: n, num_iterations: iters, num_histogram_bins: bins, ..SeedsConfig::default() },
            hue,
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_is_valid_after_every_iteration(case in arb_case()) {
        let img = hsv(case.w, case.h, case.hue.clone());
        let grid = init_grid(case.w, case.h, &case.cfg).unwrap();
        let zero = refine(grid.clone(), &img, &SeedsConfig { num_iterations: 0, ..case.cfg.clone() }).unwrap();
        prop_assert_eq!(zero.labels(), grid.labels());
        prop_assert_eq!(rectangular_subset(&zero).len(), zero.len());
        for it in 0..=case.cfg.num_iterations {
            let cfg = SeedsConfig { num_iterations: it, ..case.cfg.clone() };
            let p = refine(grid.clone(), &img, &cfg).unwrap();
            assert_valid(&p, &case.hue);
            prop_assert_eq!(rectangular_subset(&p), rectangular_oracle(&p));
        }
    }

    #[test]
    fn uniform_image_stays_grid(case in arb_case(), v in 0u8..180) {
        let img = hsv(case.w, case.h, vec![v; case.w * case.h]);
        let grid = init_grid(case.w, case.h, &case.cfg).unwrap();
        let p = refine(grid.clone(), &img, &case.cfg).unwrap();
        prop_assert_eq!(p.labels(), grid.labels());
    }

    #[test]
    fn flat_half_interior_stays_rectangular(case in arb_case(), flat in 0u8..180, split in 0.2f64..0.8) {
        let split = ((case.w as f64 * split) as usize).max(1);
        let hue: Vec<u8> = (0..case.w * case.h)
            .map(|i| if i % case.w < split { flat } else { case.hue[i] })
            .collect();
        let img = hsv(case.w, case.h, hue);
        let grid = init_grid(case.w, case.h, &case.cfg).unwrap();
        let p = refine(grid.clone(), &img, &case.cfg).unwrap();
        let in_flat = |r: &Rect| r.x1 < split;
        let cols = grid.grid_cols();
        let rows = grid.grid_rows();
        let rect = rectangular_subset(&p);
        prop_assert_eq!(&rect, &rectangular_oracle(&p));
        for id in 0..grid.len() {
            let (c, r) = (id % cols, id / cols);
            let mut block = vec![id];
            if c > 0 { block.push(id - 1); }
            if c + 1 < cols { block.push(id + 1); }
            if r > 0 { block.push(id - cols); }
            if r + 1 < rows { block.push(id + cols); }
            if block.iter().all(|&b| in_flat(&grid.cell(b as u32).initial)) {
                prop_assert!(rect.contains(&(id as u32)), "flat interior superpixel {} moved", id);
            }
        }
    }
}

#[test]
fn full_scale_grid_on_half_flat_image() {
    let (w, h) = (320, 200);
    let hue: Vec<u8> = (0..w * h).map(|i| if i % w < w / 2 { 120 } else { ((i * 7919) % 180) as u8 }).collect();
    let img = hsv(w, h, hue.clone());
    let cfg = SeedsConfig { num_superpixels: 4000, ..SeedsConfig::default() };
    let p = refine(init_grid(w, h, &cfg).unwrap(), &img, &cfg).unwrap();
    assert_valid(&p, &hue);
    let rect = rectangular_subset(&p);
    assert_eq!(rect, rectangular_oracle(&p));
    assert!(rect.len() * 3 > p.len());
}
