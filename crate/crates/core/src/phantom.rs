//! Numerical phantoms: tissue layouts rendered into fingerprint stacks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::epg::{self, TissueParams};
use crate::error::{Error, Result};
use crate::image::{ImageStack, Mask, ParamMap};
use crate::schedule::Schedule;

/// Region geometry in pixel coordinates (`x` right, `y` down, pixel
/// centres at integer coordinates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
    },
    /// Inclusive bounds.
    Rect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
                dx * dx + dy * dy <= 1.0
            }
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: String,
    pub params: TissueParams,
    pub shape: Shape,
}

/// Geometric phantom. Later regions paint over earlier ones; pixels covered
/// by no region are background and masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub regions: Vec<Region>,
}

/// White matter, grey matter and CSF relaxation times (ms).
pub const WHITE_MATTER: TissueParams = TissueParams::new(663.0, 83.0);
pub const GREY_MATTER: TissueParams = TissueParams::new(1110.0, 96.0);
pub const CSF: TissueParams = TissueParams::new(3799.0, 870.0);

impl PhantomSpec {
    /// Axial-slice caricature: a CSF rim around grey matter, a white-matter
    /// core and two CSF ventricles.
    pub fn brain(width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        let ellipse = |ox: f64, oy: f64, rx: f64, ry: f64| Shape::Ellipse {
            cx: cx + ox * w,
            cy: cy + oy * h,
            rx: rx * w,
            ry: ry * h,
        };
        let region = |label: &str, params, shape| Region { label: label.into(), params, shape };
        PhantomSpec {
            width,
            height,
            regions: vec![
                region("csf", CSF, ellipse(0.0, 0.0, 0.44, 0.47)),
                region("gm", GREY_MATTER, ellipse(0.0, 0.0, 0.40, 0.43)),
                region("wm", WHITE_MATTER, ellipse(0.0, 0.0, 0.29, 0.32)),
                region("csf", CSF, ellipse(-0.07, -0.02, 0.035, 0.12)),
                region("csf", CSF, ellipse(0.07, -0.02, 0.035, 0.12)),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidPhantom("zero-sized phantom".into()));
        }
        for r in &self.regions {
            check_tissue(&r.label, r.params)?;
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<TissueLayout> {
        self.validate()?;
        let mut cells = vec![None; self.width * self.height];
        for y in 0..self.height {
            for x in 0..self.width {
                let (fx, fy) = (x as f64, y as f64);
                if let Some(r) = self.regions.iter().rev().find(|r| r.shape.contains(fx, fy)) {
                    cells[y * self.width + x] = Some(r.params);
                }
            }
        }
        Ok(TissueLayout { width: self.width, height: self.height, cells })
    }
}

fn check_tissue(label: &str, p: TissueParams) -> Result<()> {
    p.validate()?;
    if p.t1_ms <= p.t2_ms {
        return Err(Error::InvalidPhantom(format!("region {label}: t1 {} must exceed t2 {}", p.t1_ms, p.t2_ms)));
    }
    Ok(())
}

/// 8-bit label raster plus a label -> tissue table. Label 0 and labels
/// absent from the table are background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
    pub table: Vec<(u8, String, TissueParams)>,
}

impl LabelMap {
    pub fn layout(&self) -> Result<TissueLayout> {
        if self.labels.len() != self.width * self.height {
            return Err(Error::DimensionMismatch { expected: self.width * self.height, actual: self.labels.len() });
        }
        let mut lut: [Option<TissueParams>; 256] = [None; 256];
        for (label, name, p) in &self.table {
            check_tissue(name, *p)?;
            if *label != 0 {
                lut[*label as usize] = Some(*p);
            }
        }
        let cells = self.labels.iter().map(|&l| lut[l as usize]).collect();
        Ok(TissueLayout { width: self.width, height: self.height, cells })
    }
}

/// Tissue per pixel; `None` is background.
#[derive(Debug, Clone, PartialEq)]
pub struct TissueLayout {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Option<TissueParams>>,
}

/// Simulates every foreground pixel with the given schedule. Returns the
/// truth maps and the noiseless magnitude stack; background pixels are
/// masked out with all-zero fingerprints.
pub fn render(layout: &TissueLayout, schedule: &Schedule) -> Result<(ParamMap, ImageStack)> {
    schedule.validate()?;
    let k_max = epg::default_k_max(schedule);
    let mask = Mask::new(layout.width, layout.height, layout.cells.iter().map(Option::is_some).collect())?;
    let mut truth = ParamMap::empty(mask);
    let mut stack = ImageStack::zeros(layout.width, layout.height, schedule.len());
    // Phantoms hold a handful of distinct tissues; simulate each once.
    let mut cache: Vec<(TissueParams, Vec<f64>)> = Vec::new();
    for (i, cell) in layout.cells.iter().enumerate() {
        let Some(p) = *cell else { continue };
        let fp = match cache.iter().find(|(q, _)| *q == p) {
            Some((_, fp)) => fp,
            None => {
                let fp = epg::simulate(p, schedule, k_max)?.0;
                cache.push((p, fp));
                &cache[cache.len() - 1].1
            }
        };
        stack.voxel_mut(i).copy_from_slice(fp);
        truth.set(i, p);
    }
    Ok((truth, stack))
}

pub fn render_phantom(spec: &PhantomSpec, schedule: &Schedule) -> Result<(ParamMap, ImageStack)> {
    render(&spec.layout()?, schedule)
}
