//! Vehicular tasks as ordered chains of typed sub-tasks.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::caching::OutputLibrary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Upload,
    Download,
    Compute,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Upload, Category::Download, Category::Compute];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Upload => "upload",
            Category::Download => "download",
            Category::Compute => "compute",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upload" => Ok(Category::Upload),
            "download" => Ok(Category::Download),
            "compute" => Ok(Category::Compute),
            other => Err(Error::Domain(format!("unknown category {other:?}"))),
        }
    }
}

/// One step of a task. The workload is always `rho * d_in`, so it is not
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTask {
    id: usize,
    category: Category,
    d_in: u64,
    d_out: u64,
    rho: f64,
    out_rank: usize,
}

impl SubTask {
    pub fn upload(id: usize, d_in: u64) -> Result<Self> {
        Self::new(id, Category::Upload, d_in, 0, 0.0, 0)
    }

    pub fn download(id: usize, d_out: u64, out_rank: usize) -> Result<Self> {
        Self::new(id, Category::Download, 0, d_out, 0.0, out_rank)
    }

    pub fn compute(id: usize, d_in: u64, d_out: u64, rho: f64, out_rank: usize) -> Result<Self> {
        Self::new(id, Category::Compute, d_in, d_out, rho, out_rank)
    }

    /// Builds a sub-task and checks that its sizes match the declared category.
    pub fn new(
        id: usize,
        category: Category,
        d_in: u64,
        d_out: u64,
        rho: f64,
        out_rank: usize,
    ) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidSubTask {
            index: id,
            reason: reason.to_string(),
        };
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(bad("complexity must be finite and non-negative"));
        }
        let st = SubTask {
            id,
            category,
            d_in,
            d_out,
            rho,
            out_rank,
        };
        let observed = classify(&st)?;
        if observed != category {
            return Err(bad(&format!(
                "sizes describe a {observed} sub-task, declared {category}"
            )));
        }
        match category {
            Category::Upload if out_rank != 0 => Err(bad("upload sub-tasks have no output rank")),
            Category::Download | Category::Compute if out_rank == 0 => {
                Err(bad("sub-tasks with output need a rank >= 1"))
            }
            _ => Ok(st),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }
    pub fn category(&self) -> Category {
        self.category
    }
    pub fn d_in(&self) -> u64 {
        self.d_in
    }
    pub fn d_out(&self) -> u64 {
        self.d_out
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    /// CPU cycles needed to process the input.
    pub fn zeta(&self) -> f64 {
        self.rho * self.d_in as f64
    }
    /// Library rank of the output, 0 when the sub-task produces none.
    pub fn out_rank(&self) -> usize {
        self.out_rank
    }
}

/// Category implied by the sign pattern of workload, input and output.
pub fn classify(st: &SubTask) -> Result<Category> {
    let zeta = st.zeta();
    match (zeta > 0.0, st.d_in > 0, st.d_out > 0) {
        (false, true, false) => Ok(Category::Upload),
        (false, false, true) => Ok(Category::Download),
        (true, true, true) => Ok(Category::Compute),
        _ => Err(Error::InvalidSubTask {
            index: st.id,
            reason: format!(
                "no category matches zeta={zeta}, d_in={}, d_out={}",
                st.d_in, st.d_out
            ),
        }),
    }
}

/// Sub-tasks executed one after another.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGraph {
    subtasks: Vec<SubTask>,
}

impl TaskGraph {
    pub fn new(subtasks: Vec<SubTask>) -> Result<Self> {
        if subtasks.is_empty() {
            return Err(Error::Domain("a task needs at least one sub-task".into()));
        }
        Ok(TaskGraph { subtasks })
    }

    pub fn subtasks(&self) -> &[SubTask] {
        &self.subtasks
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }

    /// One `id,category,d_in,d_out,rho,rank` line per sub-task.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for st in &self.subtasks {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                st.id, st.category, st.d_in, st.d_out, st.rho, st.out_rank
            ));
        }
        out
    }

    pub fn from_records(text: &str) -> Result<Self> {
        let mut subtasks = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse { line: n + 1, reason };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
            let id = int(fields[0])? as usize;
            let category = fields[1].parse::<Category>()?;
            let d_in = int(fields[2])?;
            let d_out = int(fields[3])?;
            let rho = fields[4]
                .parse::<f64>()
                .map_err(|e| err(format!("{:?}: {e}", fields[4])))?;
            let rank = int(fields[5])? as usize;
            subtasks.push(SubTask::new(id, category, d_in, d_out, rho, rank)?);
        }
        TaskGraph::new(subtasks)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub subtasks: usize,
    pub size_min_bytes: u64,
    pub size_max_bytes: u64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Relative weights of upload, download and compute sub-tasks.
    pub mix: [f64; 3],
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            subtasks: 6,
            size_min_bytes: 100_000,
            size_max_bytes: 500_000,
            rho_min: 0.0,
            rho_max: 12_000.0,
            mix: [1.0, 1.0, 1.0],
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.subtasks == 0 {
            return bad("sub-task count must be at least 1");
        }
        if self.size_min_bytes == 0 || self.size_min_bytes > self.size_max_bytes {
            return bad("size range must satisfy 0 < min <= max");
        }
        if !(self.rho_min >= 0.0 && self.rho_min <= self.rho_max) {
            return bad("complexity range must satisfy 0 <= min <= max");
        }
        if self.mix.iter().any(|w| !(*w >= 0.0)) || self.mix.iter().sum::<f64>() <= 0.0 {
            return bad("category mix needs non-negative weights with a positive sum");
        }
        if self.mix[2] > 0.0 && self.rho_max <= 0.0 {
            return bad("compute sub-tasks need a positive complexity range");
        }
        Ok(())
    }
}

/// Deterministic task for a seed.
pub fn generate_task(seed: u64, cfg: &WorkloadConfig, library: &OutputLibrary) -> Result<TaskGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_task_with(&mut rng, cfg, library)
}

pub fn generate_task_with<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &WorkloadConfig,
    library: &OutputLibrary,
) -> Result<TaskGraph> {
    cfg.validate()?;
    let categories = WeightedIndex::new(cfg.mix).map_err(|e| Error::Config(e.to_string()))?;
    let mut subtasks = Vec::with_capacity(cfg.subtasks);
    for id in 0..cfg.subtasks {
        let st = match Category::ALL[categories.sample(rng)] {
            Category::Upload => {
                SubTask::upload(id, rng.gen_range(cfg.size_min_bytes..=cfg.size_max_bytes))?
            }
            Category::Download => {
                let rank = library.sample_rank(rng);
                SubTask::download(id, library.size(rank), rank)?
            }
            Category::Compute => {
                let d_in = rng.gen_range(cfg.size_min_bytes..=cfg.size_max_bytes);
                let rho = loop {
                    let r = rng.gen_range(cfg.rho_min..=cfg.rho_max);
                    if r > 0.0 {
                        break r;
                    }
                };
                let rank = library.sample_rank(rng);
                SubTask::compute(id, d_in, library.size(rank), rho, rank)?
            }
        };
        subtasks.push(st);
    }
    TaskGraph::new(subtasks)
}
