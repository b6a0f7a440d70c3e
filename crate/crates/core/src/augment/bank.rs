use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Instance;
use crate::error::{Error, Result};
use crate::pcio::{load_tensor, save_tensor, FeatureTensor};

const MANIFEST: &str = "manifest.txt";
const HEADER: &str = "# rpv instance bank v1";

/// Rare-class instances grouped by class, plus the ground classes they may be
/// pasted onto.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstanceBank {
    rare: BTreeSet<u32>,
    ground: BTreeSet<u32>,
    by_class: BTreeMap<u32, Vec<Instance>>,
}

impl InstanceBank {
    pub fn new(rare: BTreeSet<u32>, ground: BTreeSet<u32>) -> Self {
        Self {
            rare,
            ground,
            by_class: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, instance: Instance) -> Result<()> {
        if !self.rare.contains(&instance.class_id()) {
            return Err(Error::Validation(format!(
                "class {} is not one of the rare classes {:?}",
                instance.class_id(),
                self.rare
            )));
        }
        if let Some(existing) = self.by_class.values().flatten().next() {
            if existing.features().cols() != instance.features().cols() {
                return Err(Error::shape(format!(
                    "bank holds {}-channel instances, got {}",
                    existing.features().cols(),
                    instance.features().cols()
                )));
            }
        }
        self.by_class.entry(instance.class_id()).or_default().push(instance);
        Ok(())
    }

    pub fn extend(&mut self, instances: impl IntoIterator<Item = Instance>) -> Result<()> {
        instances.into_iter().try_for_each(|i| self.add(i))
    }

    pub fn rare_classes(&self) -> &BTreeSet<u32> {
        &self.rare
    }

    pub fn ground_classes(&self) -> &BTreeSet<u32> {
        &self.ground
    }

    /// Classes holding at least one instance, ascending.
    pub fn classes(&self) -> Vec<u32> {
        self.by_class
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(&c, _)| c)
            .collect()
    }

    pub fn instances(&self, class: u32) -> &[Instance] {
        self.by_class.get(&class).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Instance> {
        self.by_class.values().flatten()
    }

    /// Writes `manifest.txt` plus one tensor per instance (`K x (3 + C)`,
    /// xyz then features) into `dir`.
    ///
    /// Manifest lines: `rare <ids..>`, `ground <ids..>`, then
    /// `instance <class> <file>` per instance; `#` starts a comment.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let ids = |s: &BTreeSet<u32>| s.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        let mut manifest = String::new();
        let _ = writeln!(manifest, "{HEADER}");
        let _ = writeln!(manifest, "rare {}", ids(&self.rare));
        let _ = writeln!(manifest, "ground {}", ids(&self.ground));
        for (k, inst) in self.iter().enumerate() {
            let name = format!("inst_{k:05}.f32");
            let c = inst.features().cols();
            let mut data = Vec::with_capacity(inst.len() * (3 + c));
            for (p, f) in inst.points().iter().zip(0..) {
                data.extend_from_slice(p);
                data.extend_from_slice(inst.features().row(f));
            }
            save_tensor(&FeatureTensor::new(inst.len(), 3 + c, data)?, dir.join(&name))?;
            let _ = writeln!(manifest, "instance {} {name}", inst.class_id());
        }
        let path = dir.join(MANIFEST);
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut bank = InstanceBank::default();
        let parse_ids = |fields: &[&str], lineno: usize| -> Result<BTreeSet<u32>> {
            fields
                .iter()
                .map(|f| {
                    f.parse::<u32>()
                        .map_err(|_| Error::malformed(&path, format!("line {lineno}: bad class id {f:?}")))
                })
                .collect()
        };
        for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
            let line = line.split('#').next().unwrap_or("").trim();
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                ["rare", ids @ ..] => bank.rare = parse_ids(ids, lineno)?,
                ["ground", ids @ ..] => bank.ground = parse_ids(ids, lineno)?,
                ["instance", class, file] => {
                    let class: u32 = class
                        .parse()
                        .map_err(|_| Error::malformed(&path, format!("line {lineno}: bad class id {class:?}")))?;
                    if file.contains('/') || file.contains('\\') {
                        return Err(Error::malformed(
                            &path,
                            format!("line {lineno}: instance file must be a bare name"),
                        ));
                    }
                    let t = load_tensor(dir.join(file))?;
                    if t.cols() < 3 || t.rows() == 0 {
                        return Err(Error::malformed(
                            dir.join(file),
                            format!("instance tensor is {}x{}", t.rows(), t.cols()),
                        ));
                    }
                    let c = t.cols() - 3;
                    let points = (0..t.rows()).map(|r| [t.get(r, 0), t.get(r, 1), t.get(r, 2)]).collect();
                    let features = FeatureTensor::from_fn(t.rows(), c, |r, k| t.get(r, 3 + k));
                    bank.add(Instance::from_recentred(class, points, features)?)?;
                }
                _ => {
                    return Err(Error::malformed(
                        &path,
                        format!("line {lineno}: unrecognised entry {line:?}"),
                    ))
                }
            }
        }
        Ok(bank)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(class: u32, z: f32) -> Instance {
        Instance::new(
            class,
            &[[1.0, 1.0, z], [2.0, 1.5, z + 1.0], [1.5, 0.5, z + 0.5]],
            FeatureTensor::new(3, 1, vec![0.1, 0.2, 0.3]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_rare_class() {
        let mut bank = InstanceBank::new(BTreeSet::from([2]), BTreeSet::from([0]));
        assert!(bank.add(inst(3, 0.0)).is_err());
        bank.add(inst(2, 0.0)).unwrap();
        assert_eq!(bank.classes(), vec![2]);
        assert_eq!(bank.len(), 1);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut bank = InstanceBank::new(BTreeSet::from([2, 7]), BTreeSet::from([0, 1]));
        bank.extend([inst(7, -1.0), inst(2, 3.0), inst(7, 0.5)]).unwrap();
        bank.save(dir.path()).unwrap();
        let manifest = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert!(manifest.starts_with("# rpv instance bank v1\nrare 2 7\nground 0 1\ninstance 2 inst_00000.f32\n"));
        let loaded = InstanceBank::load(dir.path()).unwrap();
        assert_eq!(loaded, bank);
    }

    #[test]
    fn load_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST), "rare 1\nbogus line\n").unwrap();
        assert!(InstanceBank::load(dir.path()).is_err());
        fs::write(dir.path().join(MANIFEST), "rare 1\ninstance 1 ../x.f32\n").unwrap();
        assert!(InstanceBank::load(dir.path()).is_err());
    }
}
