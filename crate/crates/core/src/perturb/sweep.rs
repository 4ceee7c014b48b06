//! The perturbed test corpus, generated one `(family, level)` slice at a
//! time in canonical order (family, then level, then sample id).

use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;

use super::spec::{apply_perturbation, PerturbationSpec};
use super::{Family, Level, Schedule};
use crate::data::{ImageTensor, LabeledDataset};
use crate::error::{Error, Result};

/// Counts perturbed slices alive at once and remembers the peak.
#[derive(Debug, Default)]
pub struct SliceGauge {
    live: AtomicUsize,
    peak: AtomicUsize,
}

impl SliceGauge {
    pub fn live(&self) -> usize {
        self.live.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    fn enter(self: &Arc<Self>) -> SliceGuard {
        let now = self.live.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        SliceGuard(Arc::clone(self))
    }
}

#[derive(Debug)]
struct SliceGuard(Arc<SliceGauge>);

impl Drop for SliceGuard {
    fn drop(&mut self) {
        self.0.live.fetch_sub(1, Ordering::SeqCst);
    }
}

/// One `(family, level)` slice of the perturbed test set.
#[derive(Debug)]
pub struct PerturbedSlice {
    pub family: Family,
    pub level: Level,
    pub severity: f64,
    pub dataset: LabeledDataset,
    _guard: SliceGuard,
}

/// Perturb every image of `test` for one family and level.
pub fn perturb_slice(test: &LabeledDataset, family: Family, level: Level, severity: f64, global_seed: u64) -> Result<LabeledDataset> {
    let images = test
        .images
        .par_iter()
        .zip(test.sample_ids.par_iter())
        .map(|(im, &id)| apply_perturbation(im, &PerturbationSpec::for_sample(family, level, severity, global_seed, id)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset {
        images,
        labels: test.labels.clone(),
        sample_ids: test.sample_ids.clone(),
        split: test.split,
    })
}

/// Regenerate a single image of the sweep without touching the others.
pub fn regenerate_image(image: &ImageTensor, family: Family, level: Level, severity: f64, global_seed: u64, sample_id: u64) -> Result<ImageTensor> {
    apply_perturbation(image, &PerturbationSpec::for_sample(family, level, severity, global_seed, sample_id))
}

/// Iterator over all slices of a schedule; see [`generate_perturbed_dataset`].
pub struct PerturbedSweep<'a> {
    test: &'a LabeledDataset,
    schedule: &'a Schedule,
    seed: u64,
    order: Vec<(Family, Level)>,
    next: usize,
    gauge: Arc<SliceGauge>,
    cache: Option<SliceCache>,
}

impl<'a> PerturbedSweep<'a> {
    pub fn gauge(&self) -> Arc<SliceGauge> {
        Arc::clone(&self.gauge)
    }

    /// Read slices from (and write missing slices to) `dir`.
    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache = Some(SliceCache { dir: dir.into() });
        self
    }

    pub fn slice_count(&self) -> usize {
        self.order.len()
    }

    pub fn image_count(&self) -> usize {
        self.order.len() * self.test.len()
    }

    fn produce(&self, family: Family, level: Level) -> Result<LabeledDataset> {
        let severity = self.schedule.severity(family, level).expect("family comes from the schedule");
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.load(self.test, family, level, severity, self.seed)? {
                return Ok(hit);
            }
            let fresh = perturb_slice(self.test, family, level, severity, self.seed)?;
            cache.store(&fresh, family, level, severity, self.seed)?;
            return Ok(fresh);
        }
        perturb_slice(self.test, family, level, severity, self.seed)
    }
}

impl Iterator for PerturbedSweep<'_> {
    type Item = Result<PerturbedSlice>;

    fn next(&mut self) -> Option<Self::Item> {
        let &(family, level) = self.order.get(self.next)?;
        self.next += 1;
        let guard = self.gauge.enter();
        Some(self.produce(family, level).map(|dataset| PerturbedSlice {
            family,
            level,
            severity: self.schedule.severity(family, level).unwrap(),
            dataset,
            _guard: guard,
        }))
    }
}

/// Stream every scheduled family at every level over `test`.
///
/// Image `sample_id` of slice `(family, level)` is corrupted with the
/// stream `sample_seed(seed, family, level, sample_id)`, so any image can
/// be regenerated alone. Slices are produced lazily; hold at most one at a
/// time to keep memory bounded.
pub fn generate_perturbed_dataset<'a>(test: &'a LabeledDataset, schedule: &'a Schedule, seed: u64) -> PerturbedSweep<'a> {
    let order = schedule
        .families()
        .flat_map(|f| Level::all().map(move |l| (f, l)))
        .collect();
    PerturbedSweep {
        test,
        schedule,
        seed,
        order,
        next: 0,
        gauge: Arc::default(),
        cache: None,
    }
}

/// On-disk slice store keyed by `(family, level)`.
///
/// File layout (little-endian): magic `MLMSLICE`, `u32` count, `u32`
/// height, `u32` width, `u64` seed, `f64` severity, then per image a `u64`
/// sample id, a `u8` label and `height * width` `f64` pixels.
#[derive(Clone, Debug)]
pub struct SliceCache {
    dir: PathBuf,
}

const SLICE_MAGIC: &[u8; 8] = b"MLMSLICE";

impl SliceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, family: Family, level: Level) -> PathBuf {
        self.dir.join(format!("{}_L{:02}.slice", family.name(), level.get()))
    }

    fn store(&self, slice: &LabeledDataset, family: Family, level: Level, severity: f64, seed: u64) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path(family, level);
        let (h, w) = slice.images.first().map(|i| (i.height(), i.width())).unwrap_or((0, 0));
        let mut out = Vec::with_capacity(36 + slice.len() * (9 + h * w * 8));
        out.extend_from_slice(SLICE_MAGIC);
        out.write_u32::<LittleEndian>(slice.len() as u32).unwrap();
        out.write_u32::<LittleEndian>(h as u32).unwrap();
        out.write_u32::<LittleEndian>(w as u32).unwrap();
        out.write_u64::<LittleEndian>(seed).unwrap();
        out.write_f64::<LittleEndian>(severity).unwrap();
        for ((im, &label), &id) in slice.images.iter().zip(&slice.labels).zip(&slice.sample_ids) {
            out.write_u64::<LittleEndian>(id).unwrap();
            out.write_u8(label).unwrap();
            for &v in im.pixels() {
                out.write_f64::<LittleEndian>(v).unwrap();
            }
        }
        let mut file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(&out).map_err(|e| Error::io(&path, e))
    }

    /// A cached slice, if one exists for the same source ids, seed and severity.
    fn load(&self, test: &LabeledDataset, family: Family, level: Level, severity: f64, seed: u64) -> Result<Option<LabeledDataset>> {
        let path = self.path(family, level);
        let mut bytes = Vec::new();
        match std::fs::File::open(&path) {
            Ok(mut f) => f.read_to_end(&mut bytes).map_err(|e| Error::io(&path, e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let corrupt = |_| Error::io(&path, std::io::Error::new(std::io::ErrorKind::InvalidData, "damaged slice cache"));
        let mut cur = std::io::Cursor::new(bytes);
        let mut magic = [0u8; 8];
        cur.read_exact(&mut magic).map_err(corrupt)?;
        let n = cur.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
        let h = cur.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
        let w = cur.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
        let cached_seed = cur.read_u64::<LittleEndian>().map_err(corrupt)?;
        let cached_severity = cur.read_f64::<LittleEndian>().map_err(corrupt)?;
        if &magic != SLICE_MAGIC || n != test.len() || cached_seed != seed || cached_severity != severity {
            return Ok(None);
        }
        let mut images = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut ids = Vec::with_capacity(n);
        for &expected_id in &test.sample_ids {
            let id = cur.read_u64::<LittleEndian>().map_err(corrupt)?;
            if id != expected_id {
                return Ok(None);
            }
            ids.push(id);
            labels.push(cur.read_u8().map_err(corrupt)?);
            let mut px = vec![0.0; h * w];
            cur.read_f64_into::<LittleEndian>(&mut px).map_err(corrupt)?;
            images.push(ImageTensor::new(h, w, px)?);
        }
        Ok(Some(LabeledDataset {
            images,
            labels,
            sample_ids: ids,
            split: test.split,
        }))
    }
}

