//! Per-voxel slice features for the built-in learner.

pub const N_FEATURES: usize = 4;

pub type Features = [f64; N_FEATURES];

/// For every pixel of an `nx × ny` slice: intensity, 3×3 mean, 3×3 standard
/// deviation and Sobel gradient magnitude. Out-of-range neighbors clamp to
/// the nearest edge pixel.
pub fn slice_features(slice: &[f32], nx: usize, ny: usize) -> Vec<Features> {
    debug_assert_eq!(slice.len(), nx * ny);
    let at = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, nx as isize - 1) as usize;
        let y = y.clamp(0, ny as isize - 1) as usize;
        f64::from(slice[y * nx + x])
    };
    let mut out = Vec::with_capacity(nx * ny);
    for y in 0..ny as isize {
        for x in 0..nx as isize {
            let mut sum = 0.0;
            let mut sq = 0.0;
            let mut win = [[0.0; 3]; 3];
            for (dy, row) in win.iter_mut().enumerate() {
                for (dx, v) in row.iter_mut().enumerate() {
                    *v = at(x + dx as isize - 1, y + dy as isize - 1);
                    sum += *v;
                    sq += *v * *v;
                }
            }
            let mean = sum / 9.0;
            let var = (sq / 9.0 - mean * mean).max(0.0);
            let gx = (win[0][2] + 2.0 * win[1][2] + win[2][2]) - (win[0][0] + 2.0 * win[1][0] + win[2][0]);
            let gy = (win[2][0] + 2.0 * win[2][1] + win[2][2]) - (win[0][0] + 2.0 * win[0][1] + win[0][2]);
            out.push([win[1][1], mean, var.sqrt(), (gx * gx + gy * gy).sqrt()]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_slice_has_no_texture() {
        let f = slice_features(&[0.5; 12], 4, 3);
        for v in f {
            assert!((v[0] - 0.5).abs() < 1e-12);
            assert!((v[1] - 0.5).abs() < 1e-12);
            assert!(v[2].abs() < 1e-6);
            assert!(v[3].abs() < 1e-12);
        }
    }

    #[test]
    fn vertical_edge_response() {
        // columns 0,1 = 0 and 2,3 = 1
        let s: Vec<f32> = (0..16).map(|i| if i % 4 >= 2 { 1.0 } else { 0.0 }).collect();
        let f = slice_features(&s, 4, 4);
        // pixel (1,1): left column 0, right column 1 -> gx = 4
        assert!((f[5][3] - 4.0).abs() < 1e-12);
        assert!((f[5][1] - 3.0 / 9.0).abs() < 1e-12);
        // far from the edge, with clamping, (0,0) sees only zeros to the right at x=1
        assert_eq!(f[0][3], 0.0);
    }
}
