//! Patch texture mapping: UV-to-pixel transform, triangle rasterization,
//! per-vertex color sampling, and RGB-to-YUV conversion.
//!
//! The rasterizer collects every pixel whose center lies inside the mapped
//! triangle, with boundary centers resolved by a top-left fill rule so two
//! faces sharing a UV edge never both claim an edge pixel. Degenerate or
//! sub-pixel triangles fall back to the single pixel nearest the triangle
//! centroid, guaranteeing at least one effective pixel per face.

use nalgebra::Vector2;
use serde::Serialize;

use crate::patch::GeodesicPatch;
use crate::texture::TextureImage;

/// Keeps clamped coordinates strictly below the image extent so flooring
/// yields a valid pixel index.
const EDGE_EPS: f64 = 1e-6;

/// RGB-to-YUV conversion variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    #[default]
    Bt601,
    Bt709,
}

/// Affine color conversion: `yuv = matrix * rgb + offset`, clamped to
/// `[0, 255]` per channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorConversion {
    pub matrix: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl ColorConversion {
    /// Full-range BT.601 (the PSNR-yuv convention).
    pub fn bt601() -> Self {
        ColorConversion {
            matrix: [
                [0.299, 0.587, 0.114],
                [-0.1687, -0.3313, 0.5],
                [0.5, -0.4187, -0.0813],
            ],
            offset: [0.0, 128.0, 128.0],
        }
    }

    /// Full-range BT.709.
    pub fn bt709() -> Self {
        let (kr, kb) = (0.2126, 0.0722);
        let kg = 1.0 - kr - kb;
        ColorConversion {
            matrix: [
                [kr, kg, kb],
                [
                    -kr / (2.0 * (1.0 - kb)),
                    -kg / (2.0 * (1.0 - kb)),
                    0.5,
                ],
                [
                    0.5,
                    -kg / (2.0 * (1.0 - kr)),
                    -kb / (2.0 * (1.0 - kr)),
                ],
            ],
            offset: [0.0, 128.0, 128.0],
        }
    }

    pub fn for_space(space: ColorSpace) -> Self {
        match space {
            ColorSpace::Bt601 => Self::bt601(),
            ColorSpace::Bt709 => Self::bt709(),
        }
    }

    pub fn apply(&self, rgb: [u8; 3]) -> [f64; 3] {
        let input = [rgb[0] as f64, rgb[1] as f64, rgb[2] as f64];
        let mut out = [0.0; 3];
        for (c, (row, off)) in out.iter_mut().zip(self.matrix.iter().zip(self.offset)) {
            let v = row[0] * input[0] + row[1] * input[1] + row[2] * input[2] + off;
            *c = v.clamp(0.0, 255.0);
        }
        out
    }
}

/// Convert an 8-bit RGB triple to full-range YUV.
pub fn rgb_to_yuv(rgb: [u8; 3], space: ColorSpace) -> [f64; 3] {
    ColorConversion::for_space(space).apply(rgb)
}

/// Map a texture coordinate to continuous pixel coordinates.
///
/// Values outside `[0, 1]` wrap (tiling textures); `u = 1` and `v = 0` map
/// to the right and bottom image edges rather than wrapping. The result is
/// clamped just inside the raster so flooring always hits a valid pixel.
pub fn uv_to_pixel(u: f64, v: f64, width: usize, height: usize) -> (f64, f64) {
    let wrap = |c: f64| if (0.0..=1.0).contains(&c) { c } else { c - c.floor() };
    let x = wrap(u) * width as f64;
    let y = (1.0 - wrap(v)) * height as f64;
    (
        x.clamp(0.0, width as f64 - EDGE_EPS),
        y.clamp(0.0, height as f64 - EDGE_EPS),
    )
}

/// One effective pixel of a face: raster position plus its RGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelSample {
    pub x: usize,
    pub y: usize,
    pub rgb: [u8; 3],
}

fn orient2d(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Top or left edge of a triangle wound so the interior has positive edge
/// functions (y grows downward): a horizontal edge pointing +x, or any
/// edge pointing -y.
fn is_top_left(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.1 == b.1 && b.0 > a.0) || b.1 < a.1
}

/// Collect pixels of `width`x`height` whose centers lie inside the
/// triangle under the top-left rule; empty if the triangle covers no
/// center or is degenerate.
fn scan_triangle(corners: [(f64, f64); 3], width: usize, height: usize) -> Vec<(usize, usize)> {
    let [a, mut b, mut c] = corners;
    let orient = orient2d(a, b, c);
    if orient == 0.0 {
        return Vec::new();
    }
    if orient < 0.0 {
        std::mem::swap(&mut b, &mut c);
    }

    let xs = [a.0, b.0, c.0];
    let ys = [a.1, b.1, c.1];
    let min_x = xs.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let max_x = xs.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let min_y = ys.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let max_y = ys.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));

    let px_lo = ((min_x - 0.5).ceil().max(0.0)) as usize;
    let px_hi = ((max_x - 0.5).floor().min(width as f64 - 1.0)).max(0.0) as usize;
    let py_lo = ((min_y - 0.5).ceil().max(0.0)) as usize;
    let py_hi = ((max_y - 0.5).floor().min(height as f64 - 1.0)).max(0.0) as usize;
    if min_x - 0.5 > px_hi as f64 || min_y - 0.5 > py_hi as f64 {
        return Vec::new();
    }

    let edges = [(a, b), (b, c), (c, a)];
    let mut out = Vec::new();
    for py in py_lo..=py_hi {
        for px in px_lo..=px_hi {
            let p = (px as f64 + 0.5, py as f64 + 0.5);
            let inside = edges.iter().all(|&(ea, eb)| {
                let e = orient2d(ea, eb, p);
                e > 0.0 || (e == 0.0 && is_top_left(ea, eb))
            });
            if inside {
                out.push((px, py));
            }
        }
    }
    out
}

fn fallback_pixel(corners: [(f64, f64); 3], width: usize, height: usize) -> (usize, usize) {
    let cx = (corners[0].0 + corners[1].0 + corners[2].0) / 3.0;
    let cy = (corners[0].1 + corners[1].1 + corners[2].1) / 3.0;
    (
        (cx.floor().max(0.0) as usize).min(width - 1),
        (cy.floor().max(0.0) as usize).min(height - 1),
    )
}

/// Rasterize a triangle given directly in pixel coordinates.
///
/// Always returns at least one pixel: degenerate or sub-pixel triangles
/// yield the single pixel nearest their centroid.
pub fn rasterize_pixel_triangle(
    corners: [(f64, f64); 3],
    width: usize,
    height: usize,
) -> Vec<(usize, usize)> {
    let covered = scan_triangle(corners, width, height);
    if covered.is_empty() {
        vec![fallback_pixel(corners, width, height)]
    } else {
        covered
    }
}

/// Rasterize one face's UV triangle against the texture, returning its
/// effective pixel cluster.
pub fn rasterize_face(uvs: [Vector2<f64>; 3], image: &TextureImage) -> Vec<PixelSample> {
    let corners = uvs.map(|t| uv_to_pixel(t.x, t.y, image.width(), image.height()));
    rasterize_pixel_triangle(corners, image.width(), image.height())
        .into_iter()
        .map(|(x, y)| PixelSample {
            x,
            y,
            rgb: image.pixel(x, y),
        })
        .collect()
}

/// Sample the color under a vertex's texture coordinate.
pub fn sample_vertex_color(
    uv: Vector2<f64>,
    image: &TextureImage,
    conversion: &ColorConversion,
) -> [f64; 3] {
    let (x, y) = uv_to_pixel(uv.x, uv.y, image.width(), image.height());
    let px = (x.floor() as usize).min(image.width() - 1);
    let py = (y.floor() as usize).min(image.height() - 1);
    conversion.apply(image.pixel(px, py))
}

/// A geodesic patch augmented with per-face pixel clusters and per-vertex
/// YUV colors (local vertex order: center first, then neighbors).
#[derive(Debug, Clone)]
pub struct TexturedGeodesicPatch {
    pub patch: GeodesicPatch,
    pub face_pixels: Vec<Vec<PixelSample>>,
    pub total_pixels: usize,
    pub vertex_colors: Vec<[f64; 3]>,
}

/// Texture-map a patch: rasterize every face and sample every vertex color.
pub fn texture_patch(
    patch: GeodesicPatch,
    image: &TextureImage,
    conversion: &ColorConversion,
) -> TexturedGeodesicPatch {
    let face_pixels: Vec<Vec<PixelSample>> = patch
        .faces
        .iter()
        .map(|f| rasterize_face([patch.uv[f[0]], patch.uv[f[1]], patch.uv[f[2]]], image))
        .collect();
    let total_pixels = face_pixels.iter().map(Vec::len).sum();
    let vertex_colors = patch
        .uv
        .iter()
        .map(|&t| sample_vertex_color(t, image, conversion))
        .collect();
    TexturedGeodesicPatch {
        patch,
        face_pixels,
        total_pixels,
        vertex_colors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat_image(width: usize, height: usize, rgb: [u8; 3]) -> TextureImage {
        TextureImage::new(width, height, vec![rgb; width * height])
    }

    /// Independent point-in-triangle oracle: full-image scan with its own
    /// barycentric-sign evaluation of the same top-left rule.
    fn oracle_scan(corners: [(f64, f64); 3], width: usize, height: usize) -> Vec<(usize, usize)> {
        let [a, b, c] = corners;
        let det = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        if det == 0.0 {
            return Vec::new();
        }
        let (v0, v1, v2) = if det < 0.0 { (a, c, b) } else { (a, b, c) };
        let mut hits = Vec::new();
        for py in 0..height {
            for px in 0..width {
                let p = (px as f64 + 0.5, py as f64 + 0.5);
                let mut ok = true;
                for (s, e) in [(v0, v1), (v1, v2), (v2, v0)] {
                    let cross = (e.0 - s.0) * (p.1 - s.1) - (e.1 - s.1) * (p.0 - s.0);
                    let on_topleft = (s.1 == e.1 && e.0 > s.0) || e.1 < s.1;
                    if cross < 0.0 || (cross == 0.0 && !on_topleft) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    hits.push((px, py));
                }
            }
        }
        hits
    }

    #[test]
    fn uv_to_pixel_direct_cases() {
        assert_eq!(uv_to_pixel(0.5, 0.5, 100, 100), (50.0, 50.0));
        let (x, y) = uv_to_pixel(0.0, 1.0, 100, 100);
        assert_eq!((x, y), (0.0, 0.0));
    }

    #[test]
    fn uv_wraps_outside_unit_range() {
        assert_eq!(
            uv_to_pixel(1.25, 0.5, 64, 64),
            uv_to_pixel(0.25, 0.5, 64, 64)
        );
        assert_eq!(
            uv_to_pixel(-0.75, 0.5, 64, 64),
            uv_to_pixel(0.25, 0.5, 64, 64)
        );
        // u = 1 is the right edge, not a wrap back to 0.
        let (x, _) = uv_to_pixel(1.0, 0.5, 64, 64);
        assert!(x > 63.0);
    }

    #[test]
    fn right_triangle_matches_oracle() {
        let corners = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)];
        let got = rasterize_pixel_triangle(corners, 8, 8);
        assert_eq!(got, oracle_scan(corners, 8, 8));
        // Centers strictly inside the hypotenuse: px + py <= 2.
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn degenerate_triangle_falls_back_to_one_pixel() {
        let p = (3.25, 2.75);
        let got = rasterize_pixel_triangle([p, p, p], 8, 8);
        assert_eq!(got, vec![(3, 2)]);
    }

    #[test]
    fn full_cover_triangle_hits_every_pixel() {
        let got = rasterize_pixel_triangle([(-8.0, -8.0), (24.0, -8.0), (-8.0, 24.0)], 8, 8);
        assert_eq!(got.len(), 64);
    }

    #[test]
    fn shared_diagonal_claims_each_pixel_once() {
        let size = 8usize;
        let t1 = [(0.0, 0.0), (8.0, 0.0), (8.0, 8.0)];
        let t2 = [(0.0, 0.0), (8.0, 8.0), (0.0, 8.0)];
        let mut seen = vec![0u8; size * size];
        for t in [t1, t2] {
            for (x, y) in scan_triangle(t, size, size) {
                seen[y * size + x] += 1;
            }
        }
        assert!(seen.iter().all(|&n| n == 1), "partition violated: {seen:?}");
    }

    #[test]
    fn vertex_color_on_white_image() {
        let img = flat_image(4, 4, [255, 255, 255]);
        let yuv = sample_vertex_color(Vector2::new(0.5, 0.5), &img, &ColorConversion::bt601());
        assert_relative_eq!(yuv[0], 255.0, epsilon = 1e-9);
        assert_relative_eq!(yuv[1], 128.0, epsilon = 1e-9);
        assert_relative_eq!(yuv[2], 128.0, epsilon = 1e-9);
    }

    #[test]
    fn uv_origin_samples_bottom_left_pixel() {
        let mut pixels = vec![[0u8; 3]; 4];
        pixels[2] = [9, 9, 9]; // (0, 1) = bottom-left of a 2x2 image
        let img = TextureImage::new(2, 2, pixels);
        let conv = ColorConversion::bt601();
        let yuv = sample_vertex_color(Vector2::new(0.0, 0.0), &img, &conv);
        assert_eq!(yuv, conv.apply([9, 9, 9]));
    }

    #[test]
    fn identical_uvs_sample_identically() {
        let img = flat_image(7, 3, [13, 77, 200]);
        let conv = ColorConversion::bt601();
        let a = sample_vertex_color(Vector2::new(0.3, 0.9), &img, &conv);
        let b = sample_vertex_color(Vector2::new(0.3, 0.9), &img, &conv);
        assert_eq!(a, b);
    }

    #[test]
    fn yuv_black_white_red() {
        assert_eq!(rgb_to_yuv([0, 0, 0], ColorSpace::Bt601), [0.0, 128.0, 128.0]);
        let white = rgb_to_yuv([255, 255, 255], ColorSpace::Bt601);
        assert_relative_eq!(white[0], 255.0, epsilon = 1e-9);
        assert_relative_eq!(white[1], 128.0, epsilon = 1e-9);
        assert_relative_eq!(white[2], 128.0, epsilon = 1e-9);
        let red = rgb_to_yuv([255, 0, 0], ColorSpace::Bt601);
        assert_relative_eq!(red[0], 0.299 * 255.0, epsilon = 1e-12);
        assert_relative_eq!(red[1], -0.1687 * 255.0 + 128.0, epsilon = 1e-12);
        assert_eq!(red[2], 255.0); // 255.5 clamps to the channel maximum
    }

    #[test]
    fn conversion_is_affine_on_averages() {
        let conv = ColorConversion::bt601();
        let pixels: [[u8; 3]; 4] = [[10, 20, 30], [200, 100, 50], [0, 255, 128], [33, 66, 99]];
        // Mid-range pixels: no clamping, so affinity is exact.
        let mean_rgb = [
            pixels.iter().map(|p| p[0] as f64).sum::<f64>() / 4.0,
            pixels.iter().map(|p| p[1] as f64).sum::<f64>() / 4.0,
            pixels.iter().map(|p| p[2] as f64).sum::<f64>() / 4.0,
        ];
        let mut mean_of_yuv = [0.0; 3];
        for p in pixels {
            let yuv = conv.apply(p);
            for (slot, v) in mean_of_yuv.iter_mut().zip(yuv) {
                *slot += v / 4.0;
            }
        }
        for (c, &averaged) in mean_of_yuv.iter().enumerate() {
            let direct: f64 = conv.matrix[c][0] * mean_rgb[0]
                + conv.matrix[c][1] * mean_rgb[1]
                + conv.matrix[c][2] * mean_rgb[2]
                + conv.offset[c];
            assert_relative_eq!(averaged, direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn yuv_round_trip_stays_within_one_unit() {
        for conv in [ColorConversion::bt601(), ColorConversion::bt709()] {
            let m = conv.matrix;
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            let inv = [
                [
                    (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det,
                    (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det,
                    (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det,
                ],
                [
                    (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det,
                    (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det,
                    (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det,
                ],
                [
                    (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det,
                    (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det,
                    (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det,
                ],
            ];
            let mut worst = 0.0f64;
            for r in 0..=255u16 {
                for g in 0..=255u16 {
                    for b in 0..=255u16 {
                        let yuv = conv.apply([r as u8, g as u8, b as u8]);
                        let centered = [yuv[0], yuv[1] - 128.0, yuv[2] - 128.0];
                        for (c, orig) in [r, g, b].into_iter().enumerate() {
                            let back = inv[c][0] * centered[0]
                                + inv[c][1] * centered[1]
                                + inv[c][2] * centered[2];
                            worst = worst.max((back - orig as f64).abs());
                        }
                    }
                }
            }
            assert!(worst < 1.0, "worst round-trip error {worst}");
        }
    }

    #[test]
    fn texture_patch_counts_are_additive() {
        let img = flat_image(16, 16, [100, 150, 200]);
        let patch = crate::patch::tests::fan(6, 1.0, 0.0);
        let tp = texture_patch(patch, &img, &ColorConversion::bt601());
        assert_eq!(
            tp.total_pixels,
            tp.face_pixels.iter().map(Vec::len).sum::<usize>()
        );
        assert!(tp.face_pixels.iter().all(|f| !f.is_empty()));
        assert_eq!(tp.vertex_colors.len(), tp.patch.positions.len());
    }

    proptest::proptest! {
        #[test]
        fn rasterizer_matches_oracle_on_random_triangles(
            coords in proptest::collection::vec(-4.0f64..20.0, 6)
        ) {
            let corners = [
                (coords[0], coords[1]),
                (coords[2], coords[3]),
                (coords[4], coords[5]),
            ];
            let got = scan_triangle(corners, 16, 16);
            let want = oracle_scan(corners, 16, 16);
            proptest::prop_assert_eq!(got, want);
        }

        #[test]
        fn wrap_is_periodic(
            u in 0.01f64..0.99,
            v in 0.01f64..0.99,
            ku in -3i32..=3,
            kv in -3i32..=3,
        ) {
            let (x1, y1) = uv_to_pixel(u, v, 64, 64);
            let (x2, y2) = uv_to_pixel(u + ku as f64, v + kv as f64, 64, 64);
            proptest::prop_assert!((x1 - x2).abs() < 1e-9);
            proptest::prop_assert!((y1 - y2).abs() < 1e-9);
        }
    }
}
