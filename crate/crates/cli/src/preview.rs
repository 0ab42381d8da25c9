//! 8-bit PNG encoding for previews.

use hsiseg::ScoreMap;

fn encode(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(data).expect("in-memory png data");
    }
    out
}

/// Pixel-interleaved RGB8 to PNG.
pub fn rgb_png(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    encode(width, height, png::ColorType::Rgb, rgb)
}

/// Score in `[0, 1]` to an 8-bit grey level, `round(v * 255)`.
pub fn score_to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn score_png(map: &ScoreMap) -> Vec<u8> {
    let grey: Vec<u8> = map.scores().iter().map(|&v| score_to_u8(v)).collect();
    encode(map.width(), map.height(), png::ColorType::Grayscale, &grey)
}
