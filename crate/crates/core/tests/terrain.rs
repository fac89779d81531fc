use footcast_core::rng::Stream;
use footcast_core::terrain::*;

use proptest::prelude::*;

fn spec(kind: TerrainKind, seed: u64) -> TerrainSpec {
    TerrainSpec {
        kind,
        seed,
        amplitude: 0.15,
        feature_scale: 0.5,
        extent: (6.0, 4.0),
        resolution: 0.05,
    }
}

#[test]
fn flat_terrain_is_zero() {
    let field = generate_terrain(&spec(TerrainKind::Flat, 3)).unwrap();
    assert!(field.elevations.iter().all(|&z| z == 0.0));
}

#[test]
fn ramp_spans_zero_to_amplitude() {
    let field = generate_terrain(&spec(TerrainKind::Ramp, 0)).unwrap();
    let max = field.elevations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = field.elevations.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((max - 0.15).abs() < 1e-12, "max {max}");
    assert_eq!(min, 0.0);
}

#[test]
fn stepped_generation_is_deterministic() {
    let a = generate_terrain(&spec(TerrainKind::Stepped, 7)).unwrap();
    let b = generate_terrain(&spec(TerrainKind::Stepped, 7)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn wavy_peak_bounded_by_amplitude() {
    let field = generate_terrain(&spec(TerrainKind::Wavy, 11)).unwrap();
    assert!(field.elevations.iter().all(|z| z.abs() <= 0.15 + 1e-12));
}

#[test]
fn stepped_heights_within_amplitude() {
    let field = generate_terrain(&spec(TerrainKind::Stepped, 5)).unwrap();
    assert!(field.elevations.iter().all(|&z| (0.0..=0.15).contains(&z)));
}

#[test]
fn invalid_spec_rejected() {
    let mut s = spec(TerrainKind::Flat, 0);
    s.resolution = 0.0;
    assert!(generate_terrain(&s).is_err());
    let mut s = spec(TerrainKind::Flat, 0);
    s.feature_scale = -1.0;
    assert!(generate_terrain(&s).is_err());
}

#[test]
fn scan_on_flat_terrain_is_zero_everywhere() {
    let field = generate_terrain(&spec(TerrainKind::Flat, 0)).unwrap();
    for &(x, y, psi) in &[(2.0, 2.0, 0.0), (3.0, 1.5, 1.2), (2.5, 2.5, -2.8)] {
        let scan = extract_height_scan(&field, (x, y, psi)).unwrap();
        assert!(scan.values.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn scan_on_ramp_matches_closed_form() {
    // ramp z = g * x with grade g = amplitude / extent_x
    let s = spec(TerrainKind::Ramp, 0);
    let g = s.amplitude / s.extent.0;
    let field = generate_terrain(&s).unwrap();
    let pose = (2.0, 2.0, 0.0);
    let scan = extract_height_scan(&field, pose).unwrap();
    for row in 0..SCAN_ROWS {
        for col in 0..SCAN_COLS {
            let (ox, _oy) = scan_offset(row, col);
            // base-relative: g*(x + ox) - g*x
            let expected = g * ox;
            assert!(
                (scan.at(row, col) - expected).abs() < 1e-9,
                "row {row} col {col}: {} vs {expected}",
                scan.at(row, col)
            );
        }
    }
    // monotone along rows
    for col in 0..SCAN_COLS {
        for row in 1..SCAN_ROWS {
            assert!(scan.at(row, col) > scan.at(row - 1, col));
        }
    }
}

/// Brute-force scan oracle: independent bilinear sampling at the window
/// points.
fn oracle_scan(field: &HeightField, pose: (f64, f64, f64)) -> Vec<f64> {
    let (bx, by, psi) = pose;
    let base_z = field.elevation(bx, by).unwrap();
    let mut out = Vec::new();
    for row in 0..SCAN_ROWS {
        for col in 0..SCAN_COLS {
            let ox = SCAN_X_START + row as f64 * SCAN_RES;
            let oy = SCAN_Y_START + col as f64 * SCAN_RES;
            let wx = bx + psi.cos() * ox - psi.sin() * oy;
            let wy = by + psi.sin() * ox + psi.cos() * oy;
            out.push(field.elevation(wx, wy).unwrap() - base_z);
        }
    }
    out
}

#[test]
fn rotated_scan_matches_sampling_oracle() {
    let field = generate_terrain(&spec(TerrainKind::Wavy, 21)).unwrap();
    for &psi in &[0.0, std::f64::consts::PI, 0.7, -1.9] {
        let pose = (3.0, 2.0, psi);
        let scan = extract_height_scan(&field, pose).unwrap();
        let oracle = oracle_scan(&field, pose);
        for (a, b) in scan.values.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn scan_window_out_of_bounds_is_reported() {
    let field = generate_terrain(&spec(TerrainKind::Flat, 0)).unwrap();
    let err = extract_height_scan(&field, (5.9, 3.9, 0.0)).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("out of bounds"), "{msg}");
}

#[test]
fn pool_of_constant_scan_is_constant() {
    let scan = HeightScan::new([0.37; SCAN_LEN]).unwrap();
    let pooled = pool_grid(&scan);
    assert!(pooled.values.iter().all(|&v| (v - 0.37).abs() < 1e-15));
    // dyadic constants survive block averaging bit-exactly
    let scan = HeightScan::new([0.5; SCAN_LEN]).unwrap();
    assert!(pool_grid(&scan).values.iter().all(|&v| v == 0.5));
}

#[test]
fn pool_indicator_block() {
    // block (0,0): rows 0..2, cols 0..5
    let mut values = [0.0; SCAN_LEN];
    for r in 0..2 {
        for c in 0..5 {
            values[r * SCAN_COLS + c] = 1.0;
        }
    }
    let pooled = pool_grid(&HeightScan::new(values).unwrap());
    assert_eq!(pooled.values[0], 1.0);
    assert!(pooled.values[1..].iter().all(|&v| v == 0.0));
}

#[test]
fn pool_matches_block_mean_oracle() {
    let mut s = Stream::new(&[3]);
    let mut values = [0.0; SCAN_LEN];
    for v in values.iter_mut() {
        *v = s.uniform_in(-0.2, 0.2);
    }
    let scan = HeightScan::new(values).unwrap();
    let pooled = pool_grid(&scan);
    // independent per-block means with explicit group bounds
    let row_groups = [(0, 2), (2, 4), (4, 6)];
    let col_groups = [(0, 5), (5, 9), (9, 13), (13, 17)];
    for (rg, &(r0, r1)) in row_groups.iter().enumerate() {
        for (cg, &(c0, c1)) in col_groups.iter().enumerate() {
            let mut sum = 0.0;
            let mut n = 0;
            for r in r0..r1 {
                for c in c0..c1 {
                    sum += values[r * SCAN_COLS + c];
                    n += 1;
                }
            }
            assert!((pooled.values[rg * 4 + cg] - sum / n as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn pointcloud_single_point_per_cell() {
    let mut points = Vec::new();
    for r in 0..SCAN_ROWS {
        for c in 0..SCAN_COLS {
            let (x, y) = scan_offset(r, c);
            points.push((x, y, 0.05));
        }
    }
    let scan = pointcloud_to_heightscan(&points).unwrap();
    assert!(scan.values.iter().all(|&v| v == 0.05));
}

#[test]
fn pointcloud_cell_mean_of_two() {
    let (x, y) = scan_offset(2, 8);
    let scan = pointcloud_to_heightscan(&[(x, y, 0.1), (x + 0.01, y - 0.01, 0.3)]).unwrap();
    assert!((scan.at(2, 8) - 0.2).abs() < 1e-12);
}

#[test]
fn pointcloud_gap_fill_matches_oracle() {
    // clustered cloud leaving gaps
    let mut s = Stream::new(&[9]);
    let mut points = Vec::new();
    for _ in 0..120 {
        let r = (s.next_u64() % 3) as usize; // only rows 0..3 populated
        let c = (s.next_u64() % SCAN_COLS as u64) as usize;
        let (x, y) = scan_offset(r, c);
        points.push((x, y, s.uniform_in(0.0, 0.2)));
    }
    let scan = pointcloud_to_heightscan(&points).unwrap();

    // reference binning + nearest-fill, written independently
    let mut sums = vec![0.0; SCAN_LEN];
    let mut counts = vec![0usize; SCAN_LEN];
    for &(x, y, z) in &points {
        let gr = ((x - SCAN_X_START) / SCAN_RES).round() as i64;
        let gc = ((y - SCAN_Y_START) / SCAN_RES).round() as i64;
        if (0..SCAN_ROWS as i64).contains(&gr) && (0..SCAN_COLS as i64).contains(&gc) {
            sums[gr as usize * SCAN_COLS + gc as usize] += z;
            counts[gr as usize * SCAN_COLS + gc as usize] += 1;
        }
    }
    for r in 0..SCAN_ROWS {
        for c in 0..SCAN_COLS {
            let idx = r * SCAN_COLS + c;
            let expected = if counts[idx] > 0 {
                sums[idx] / counts[idx] as f64
            } else {
                // nearest nonempty, ties by row-major order
                let mut best = usize::MAX;
                let mut best_d2 = i64::MAX;
                for j in 0..SCAN_LEN {
                    if counts[j] == 0 {
                        continue;
                    }
                    let (rr, cc) = (j / SCAN_COLS, j % SCAN_COLS);
                    let d2 = (rr as i64 - r as i64).pow(2) + (cc as i64 - c as i64).pow(2);
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = j;
                    }
                }
                sums[best] / counts[best] as f64
            };
            assert!((scan.at(r, c) - expected).abs() < 1e-12, "cell ({r},{c})");
        }
    }
}

#[test]
fn pointcloud_empty_window_errors() {
    assert!(pointcloud_to_heightscan(&[]).is_err());
    assert!(pointcloud_to_heightscan(&[(-5.0, 0.0, 0.1)]).is_err());
}

#[test]
fn variance_of_constant_scan_is_zero() {
    let scan = HeightScan::new([0.42; SCAN_LEN]).unwrap();
    assert!(heightscan_variance(&scan) < 1e-30);
    let scan = HeightScan::new([0.5; SCAN_LEN]).unwrap();
    assert_eq!(heightscan_variance(&scan), 0.0);
}

#[test]
fn variance_of_alternating_values() {
    let mut values = [0.0; SCAN_LEN];
    for (i, v) in values.iter_mut().enumerate() {
        *v = if i % 2 == 0 { 0.0 } else { 0.2 };
    }
    let scan = HeightScan::new(values).unwrap();
    assert!((heightscan_variance(&scan) - 0.01).abs() < 1e-12);
}

#[test]
fn variance_matches_textbook_oracle() {
    let mut s = Stream::new(&[13]);
    let mut values = [0.0; SCAN_LEN];
    for v in values.iter_mut() {
        *v = s.uniform_in(-1.0, 1.0);
    }
    let scan = HeightScan::new(values).unwrap();
    let mean: f64 = values.iter().sum::<f64>() / 102.0;
    let var: f64 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 102.0;
    assert!((heightscan_variance(&scan) - var).abs() < 1e-12);
}

#[test]
fn bilinear_interpolates_between_nodes() {
    let field = HeightField::new(2, 2, 1.0, (0.0, 0.0), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    assert!((field.elevation(0.5, 0.5).unwrap() - 1.5).abs() < 1e-12);
    assert!((field.elevation(1.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
    assert!(field.elevation(2.5, 0.0).is_err());
}

proptest! {
    #[test]
    fn pool_block_permutation_invariant(seed in 0u64..1000) {
        let mut s = Stream::new(&[seed]);
        let mut values = [0.0; SCAN_LEN];
        for v in values.iter_mut() {
            *v = s.uniform_in(-1.0, 1.0);
        }
        let base = pool_grid(&HeightScan::new(values).unwrap());
        // swap two entries of block (0,0): (0,0) and (1,3)
        let mut shuffled = values;
        shuffled.swap(0, SCAN_COLS + 3);
        let swapped = pool_grid(&HeightScan::new(shuffled).unwrap());
        for (a, b) in base.values.iter().zip(swapped.values.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_translation_invariant(seed in 0u64..1000, c in -5.0f64..5.0) {
        let mut s = Stream::new(&[seed]);
        let mut values = [0.0; SCAN_LEN];
        for v in values.iter_mut() {
            *v = s.uniform_in(-1.0, 1.0);
        }
        let v0 = heightscan_variance(&HeightScan::new(values).unwrap());
        let mut shifted = values;
        for v in shifted.iter_mut() {
            *v += c;
        }
        let v1 = heightscan_variance(&HeightScan::new(shifted).unwrap());
        prop_assert!((v0 - v1).abs() < 1e-12);
    }
}
