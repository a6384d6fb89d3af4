//! sRGB to CIE L*a*b* / L*u*v* conversion under a D65 white point.

const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];
const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

pub fn rgb_to_xyz(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    [
        0.4124564 * r + 0.3575761 * g + 0.1804375 * b,
        0.2126729 * r + 0.7151522 * g + 0.0721750 * b,
        0.0193339 * r + 0.1191920 * g + 0.9503041 * b,
    ]
}

fn lightness(y: f64) -> f64 {
    let yr = y / WHITE[1];
    if yr > EPSILON {
        116.0 * yr.cbrt() - 16.0
    } else {
        KAPPA * yr
    }
}

pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let xyz = rgb_to_xyz(rgb);
    let f = |t: f64| {
        if t > EPSILON {
            t.cbrt()
        } else {
            (KAPPA * t + 16.0) / 116.0
        }
    };
    let [fx, fy, fz] = [
        f(xyz[0] / WHITE[0]),
        f(xyz[1] / WHITE[1]),
        f(xyz[2] / WHITE[2]),
    ];
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn chromaticity(xyz: [f64; 3]) -> Option<(f64, f64)> {
    let d = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
    (d > 0.0).then(|| (4.0 * xyz[0] / d, 9.0 * xyz[1] / d))
}

pub fn rgb_to_luv(rgb: [u8; 3]) -> [f64; 3] {
    let xyz = rgb_to_xyz(rgb);
    let l = lightness(xyz[1]);
    let Some((u1, v1)) = chromaticity(xyz) else {
        return [0.0, 0.0, 0.0];
    };
    let (un, vn) = chromaticity(WHITE).unwrap();
    [l, 13.0 * l * (u1 - un), 13.0 * l * (v1 - vn)]
}

/// Rec. 601 luma in 0..=255, used for texture descriptors.
pub fn gray(rgb: [u8; 3]) -> f64 {
    0.299 * f64::from(rgb[0]) + 0.587 * f64::from(rgb[1]) + 0.114 * f64::from(rgb[2])
}
