//! Membership matrices drawn as grids of squares, and the on-disk Datamart
//! of class-foldered PNGs.

use std::fs::{self, File};
use std::io::{BufWriter, Cursor};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fuzzy::MembershipMatrix;

/// Smallest drawable cell interior in pixels.
pub const MIN_CELL_INNER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSpec {
    pub image_side: usize,
    /// Each feature's row of squares is drawn this many times.
    pub repetition: usize,
    /// Gap between neighbouring cells.
    pub margin: usize,
    pub foreground: u8,
    pub background: u8,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        Self {
            image_side: 64,
            repetition: 2,
            margin: 1,
            foreground: 255,
            background: 0,
        }
    }
}

/// Pixel geometry of a grid placed on a canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Pitch between cell origins.
    pub cell: usize,
    /// Side of the drawable square area inside a cell.
    pub inner: usize,
    pub origin_x: usize,
    pub origin_y: usize,
}

impl GridGeometry {
    /// Top-left pixel of the drawable area of cell `(row, col)`.
    pub fn inner_origin(&self, row: usize, col: usize) -> (usize, usize) {
        let pad = (self.cell - self.inner) / 2;
        (
            self.origin_x + col * self.cell + pad,
            self.origin_y + row * self.cell + pad,
        )
    }
}

impl LayoutSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repetition == 0 {
            return Err(invalid("repetition must be at least 1"));
        }
        if self.foreground == self.background {
            return Err(invalid("foreground and background intensities must differ"));
        }
        Ok(())
    }

    /// Square cells, grid centered on the canvas.
    pub fn geometry(&self, n_features: usize, n_terms: usize) -> Result<GridGeometry> {
        self.validate()?;
        let rows = n_features * self.repetition;
        let cols = n_terms;
        let span = rows.max(cols);
        if span == 0 {
            return Err(invalid("membership matrix is empty"));
        }
        let cell = self.image_side / span;
        if cell < MIN_CELL_INNER + self.margin {
            return Err(Error::Layout {
                required_side: span * (MIN_CELL_INNER + self.margin),
                message: format!(
                    "a {rows}x{cols} grid does not fit a {}px canvas with margin {}",
                    self.image_side, self.margin
                ),
            });
        }
        Ok(GridGeometry {
            rows,
            cols,
            cell,
            inner: cell - self.margin,
            origin_x: (self.image_side - cols * cell) / 2,
            origin_y: (self.image_side - rows * cell) / 2,
        })
    }
}

/// Side of the lit square for membership `mu`; area tracks `mu`.
pub fn square_side(inner: usize, mu: f64) -> usize {
    let side = (inner as f64 * mu.clamp(0.0, 1.0).sqrt()).round() as usize;
    side.min(inner)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImageCanvas {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageCanvas {
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}x{height} canvas",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn count_value(&self, value: u8) -> usize {
        self.pixels.iter().filter(|&&p| p == value).count()
    }

    /// Count pixels equal to `value` inside a rectangle.
    pub fn count_in(&self, x0: usize, y0: usize, w: usize, h: usize, value: u8) -> usize {
        (y0..y0 + h)
            .map(|y| {
                self.pixels[y * self.width + x0..y * self.width + x0 + w]
                    .iter()
                    .filter(|&&p| p == value)
                    .count()
            })
            .sum()
    }

    fn fill_rect(&mut self, x0: usize, y0: usize, side: usize, value: u8) {
        for y in y0..y0 + side {
            let row = y * self.width;
            self.pixels[row + x0..row + x0 + side].fill(value);
        }
    }

    /// Copy `other` into this canvas with its top-left corner at `(x0, y0)`.
    pub fn blit(&mut self, other: &ImageCanvas, x0: usize, y0: usize) {
        for y in 0..other.height.min(self.height.saturating_sub(y0)) {
            let w = other.width.min(self.width.saturating_sub(x0));
            let dst = (y0 + y) * self.width + x0;
            self.pixels[dst..dst + w].copy_from_slice(&other.pixels[y * other.width..y * other.width + w]);
        }
    }

    /// Intensities scaled to `[0, 1]`.
    pub fn to_unit_floats(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 / 255.0).collect()
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut buf, self.width as u32, self.height as u32);
            encoder.set_color(png::ColorType::Grayscale);
            encoder.set_depth(png::BitDepth::Eight);
            let mut writer = encoder.write_header().map_err(png_err)?;
            writer.write_image_data(&self.pixels).map_err(png_err)?;
        }
        Ok(buf)
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let decoder = png::Decoder::new(Cursor::new(bytes));
        let mut reader = decoder.read_info().map_err(png_err)?;
        let info = reader.info();
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(Error::Schema(format!(
                "expected 8-bit grayscale PNG, found {:?} at {:?}",
                info.color_type, info.bit_depth
            )));
        }
        let (width, height) = (info.width as usize, info.height as usize);
        let mut pixels = vec![
            0u8;
            reader
                .output_buffer_size()
                .ok_or_else(|| { Error::Schema("PNG dimensions overflow".into()) })?
        ];
        let frame = reader.next_frame(&mut pixels).map_err(png_err)?;
        pixels.truncate(frame.buffer_size());
        Self::from_pixels(width, height, pixels)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes = self.to_png_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_png_bytes(&bytes).map_err(|e| {
            Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()),
            )
        })
    }
}

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Schema(format!("PNG codec: {e}"))
}

/// Draw a membership matrix. Feature `k` occupies rows
/// `k·repetition .. (k+1)·repetition`; columns follow the term order.
pub fn render(m: &MembershipMatrix, layout: &LayoutSpec) -> Result<ImageCanvas> {
    let geo = layout.geometry(m.n_features(), m.n_terms())?;
    let mut canvas = ImageCanvas::filled(layout.image_side, layout.image_side, layout.background);
    for row in 0..geo.rows {
        let feature = row / layout.repetition;
        for (col, &mu) in m.row(feature).iter().enumerate() {
            let side = square_side(geo.inner, mu);
            if side == 0 {
                continue;
            }
            let (x0, y0) = geo.inner_origin(row, col);
            let offset = (geo.inner - side) / 2;
            canvas.fill_rect(x0 + offset, y0 + offset, side, layout.foreground);
        }
    }
    Ok(canvas)
}

/// Location of a Datamart image file.
pub fn image_path(root: &Path, class_name: &str, index: usize) -> PathBuf {
    root.join(class_name).join(format!("img_{index:05}.png"))
}

/// Write `images` under `root/<class_name>/img_NNNNN.png`, where `NNNNN` is
/// the position in `images`. Any existing tree at `root` is replaced only
/// once the new one is complete.
pub fn export_datamart(images: &[(ImageCanvas, usize)], class_names: &[String], root: &Path) -> Result<()> {
    for (i, name) in class_names.iter().enumerate() {
        if class_names[..i].contains(name) {
            return Err(Error::Schema(format!("duplicate class name `{name}`")));
        }
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::Schema(format!("class name `{name}` is not a valid folder name")));
        }
    }
    if let Some((_, label)) = images.iter().find(|(_, l)| *l >= class_names.len()) {
        return Err(invalid(format!("label {label} has no class name")));
    }

    let parent = match root.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let base = root
        .file_name()
        .ok_or_else(|| invalid(format!("{} has no final component", root.display())))?
        .to_string_lossy()
        .into_owned();
    let staging = parent.join(format!(".{base}.staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    let written = write_tree(images, class_names, &staging);
    if let Err(e) = written {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }

    let retired = parent.join(format!(".{base}.old-{}", std::process::id()));
    let had_previous = root.exists();
    if had_previous {
        fs::rename(root, &retired).map_err(|e| Error::io(root, e))?;
    }
    fs::rename(&staging, root).map_err(|e| Error::io(root, e))?;
    if had_previous {
        fs::remove_dir_all(&retired).map_err(|e| Error::io(&retired, e))?;
    }
    Ok(())
}

fn write_tree(images: &[(ImageCanvas, usize)], class_names: &[String], dir: &Path) -> Result<()> {
    for name in class_names {
        let d = dir.join(name);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    for (i, (img, label)) in images.iter().enumerate() {
        let path = image_path(dir, &class_names[*label], i);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let bytes = img.to_png_bytes()?;
        std::io::Write::write_all(&mut w, &bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ImportedDatamart {
    /// Folder names in lexicographic order; labels index into this.
    pub class_names: Vec<String>,
    pub images: Vec<(ImageCanvas, usize)>,
    /// Source file of each entry of `images`.
    pub files: Vec<PathBuf>,
    /// Files skipped for having a foreign extension.
    pub warnings: Vec<String>,
}

impl ImportedDatamart {
    /// Relabel so that labels index `target` instead of the folder order.
    pub fn relabel_to(self, target: &[String]) -> Result<Vec<(ImageCanvas, usize)>> {
        let map: Vec<usize> = self
            .class_names
            .iter()
            .map(|name| {
                target
                    .iter()
                    .position(|t| t == name)
                    .ok_or_else(|| Error::Schema(format!("datamart folder `{name}` is not a known class")))
            })
            .collect::<Result<_>>()?;
        Ok(self.images.into_iter().map(|(img, l)| (img, map[l])).collect())
    }

    /// Reorder by file name across all folders. For a tree written by
    /// [`export_datamart`] this restores the order of the exported slice.
    pub fn into_export_order(mut self) -> Self {
        let mut idx: Vec<usize> = (0..self.images.len()).collect();
        idx.sort_by(|&a, &b| {
            self.files[a]
                .file_name()
                .cmp(&self.files[b].file_name())
                .then(a.cmp(&b))
        });
        let mut images: Vec<Option<(ImageCanvas, usize)>> = self.images.into_iter().map(Some).collect();
        self.images = idx
            .iter()
            .map(|&i| images[i].take().expect("each index once"))
            .collect();
        self.files = idx.iter().map(|&i| self.files[i].clone()).collect();
        self
    }
}

/// Read a Datamart back. Class folders and files are visited in
/// lexicographic order. Every image must be `expected_side` square when
/// given, otherwise all must match the first.
pub fn import_datamart(root: &Path, expected_side: Option<usize>) -> Result<ImportedDatamart> {
    let mut class_dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            class_dirs.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    class_dirs.sort();

    let mut images = Vec::new();
    let mut sources = Vec::new();
    let mut warnings = Vec::new();
    let mut size: Option<(usize, usize)> = expected_side.map(|s| (s, s));
    for (label, class) in class_dirs.iter().enumerate() {
        let dir = root.join(class);
        let mut files = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            if !path.is_file() {
                continue;
            }
            let is_png = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("png"));
            if is_png {
                files.push(path);
            } else {
                let msg = format!("ignoring non-PNG file {}", path.display());
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        files.sort();
        for path in files {
            let img = ImageCanvas::load_png(&path)?;
            let dims = (img.width(), img.height());
            match size {
                None => size = Some(dims),
                Some(want) if want != dims => {
                    return Err(Error::Schema(format!(
                        "{} is {}x{}, expected {}x{}",
                        path.display(),
                        dims.0,
                        dims.1,
                        want.0,
                        want.1
                    )))
                }
                _ => {}
            }
            images.push((img, label));
            sources.push(path);
        }
    }
    Ok(ImportedDatamart {
        class_names: class_dirs,
        images,
        files: sources,
        warnings,
    })
}
