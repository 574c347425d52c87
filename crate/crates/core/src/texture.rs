//! Texture image decoding.

use image::DynamicImage;

use crate::error::{Error, Result};

/// Decoded 8-bit RGB texture map, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextureImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl TextureImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Self {
        assert_eq!(pixels.len(), width * height);
        assert!(width > 0 && height > 0, "texture must be non-empty");
        TextureImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// Decode PNG or JPEG bytes into an 8-bit RGB raster.
///
/// Alpha is discarded, grayscale is replicated to three channels, and
/// 16-bit channels are requantized by truncating to the high byte.
pub fn decode_texture(bytes: &[u8]) -> Result<TextureImage> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::TextureDecode(e.to_string()))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::TextureDecode("image has zero pixels".into()));
    }

    let width = img.width() as usize;
    let height = img.height() as usize;
    let pixels = match img {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => {
            // High-byte truncation, not rescaling.
            img.to_rgb16()
                .pixels()
                .map(|p| [(p[0] >> 8) as u8, (p[1] >> 8) as u8, (p[2] >> 8) as u8])
                .collect()
        }
        other => other.to_rgb8().pixels().map(|p| [p[0], p[1], p[2]]).collect(),
    };

    Ok(TextureImage::new(width, height, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::codecs::png::PngEncoder;
    use image::{ExtendedColorType, ImageEncoder};

    fn encode_png8(width: u32, height: u32, rgb: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        PngEncoder::new(&mut out)
            .write_image(rgb, width, height, ExtendedColorType::Rgb8)
            .unwrap();
        out
    }

    #[test]
    fn decodes_2x2_png_identically() {
        let rgb = [
            255, 0, 0, 0, 255, 0, //
            0, 0, 255, 10, 20, 30,
        ];
        let tex = decode_texture(&encode_png8(2, 2, &rgb)).unwrap();
        assert_eq!(tex.width(), 2);
        assert_eq!(tex.height(), 2);
        assert_eq!(tex.pixel(0, 0), [255, 0, 0]);
        assert_eq!(tex.pixel(1, 0), [0, 255, 0]);
        assert_eq!(tex.pixel(0, 1), [0, 0, 255]);
        assert_eq!(tex.pixel(1, 1), [10, 20, 30]);
    }

    #[test]
    fn sixteen_bit_png_truncates_to_high_byte() {
        let raw: [u16; 6] = [0x1234, 0xff00, 0x00ff, 0x8081, 0xabcd, 0x0001];
        let mut bytes = Vec::new();
        for v in raw {
            bytes.extend_from_slice(&v.to_ne_bytes());
        }
        let mut png = Vec::new();
        PngEncoder::new(&mut png)
            .write_image(&bytes, 2, 1, ExtendedColorType::Rgb16)
            .unwrap();
        let tex = decode_texture(&png).unwrap();
        assert_eq!(tex.pixel(0, 0), [0x12, 0xff, 0x00]);
        assert_eq!(tex.pixel(1, 0), [0x80, 0xab, 0x00]);
    }

    #[test]
    fn grayscale_replicates_channels() {
        let mut png = Vec::new();
        PngEncoder::new(&mut png)
            .write_image(&[7u8, 200], 2, 1, ExtendedColorType::L8)
            .unwrap();
        let tex = decode_texture(&png).unwrap();
        assert_eq!(tex.pixel(0, 0), [7, 7, 7]);
        assert_eq!(tex.pixel(1, 0), [200, 200, 200]);
    }

    #[test]
    fn alpha_is_discarded() {
        let mut png = Vec::new();
        PngEncoder::new(&mut png)
            .write_image(&[9u8, 8, 7, 128], 1, 1, ExtendedColorType::Rgba8)
            .unwrap();
        let tex = decode_texture(&png).unwrap();
        assert_eq!(tex.pixel(0, 0), [9, 8, 7]);
    }

    #[test]
    fn truncated_stream_is_a_decode_error() {
        let png = encode_png8(2, 2, &[0u8; 12]);
        let err = decode_texture(&png[..png.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::TextureDecode(_)));
    }

    #[test]
    fn decode_is_deterministic() {
        let png = encode_png8(2, 2, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
        assert_eq!(decode_texture(&png).unwrap(), decode_texture(&png).unwrap());
    }
}
