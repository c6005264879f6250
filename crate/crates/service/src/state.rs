use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use unitfacet_core::comparison::ComparisonTable;
use unitfacet_core::facet::FacetIndex;
use unitfacet_core::store::{ComparisonSpec, GraphStore, IngestReport};
use unitfacet_core::{Catalog, Error, Result};

/// A consistent store and the index built from it.
#[derive(Debug)]
pub struct Snapshot {
    pub store: GraphStore,
    pub index: Arc<FacetIndex>,
}

/// Readers clone the current [`Snapshot`] handle and never block on writers.
/// Writers serialize on `write_lock`, stage a modified copy, and swap it in.
#[derive(Debug)]
pub struct AppState {
    pub catalog: Arc<Catalog>,
    current: RwLock<Arc<Snapshot>>,
    write_lock: Mutex<()>,
}

impl AppState {
    pub fn new(catalog: Catalog, store: GraphStore) -> Self {
        let index = Arc::new(FacetIndex::build(&store, &catalog));
        AppState {
            catalog: Arc::new(catalog),
            current: RwLock::new(Arc::new(Snapshot { store, index })),
            write_lock: Mutex::new(()),
        }
    }

    pub fn open(dir: impl AsRef<Path>, catalog: Catalog) -> Result<Self> {
        let store = GraphStore::open(dir, &catalog)?;
        Ok(Self::new(catalog, store))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock poisoned").clone()
    }

    fn swap(&self, next: Snapshot) {
        *self.current.write().expect("snapshot lock poisoned") = Arc::new(next);
    }

    /// Ingests records and publishes a rebuilt index together with the new
    /// store contents.
    pub fn ingest(&self, text: &str) -> Result<IngestReport> {
        let _guard = self.write_lock.lock().expect("write lock poisoned");
        let mut store = self.snapshot().store.clone();
        let report = store.ingest_str(&self.catalog, text)?;
        let index = Arc::new(FacetIndex::build(&store, &self.catalog));
        self.swap(Snapshot { store, index });
        Ok(report)
    }

    /// Checks that the view renders, then persists it.
    pub fn save_comparison(&self, spec: ComparisonSpec) -> Result<String> {
        let _guard = self.write_lock.lock().expect("write lock poisoned");
        let current = self.snapshot();
        let mut store = current.store.clone();
        let table = ComparisonTable::build(&store, &spec.contributions, &spec.properties).map_err(|e| match e {
            Error::NotFound { kind, id } => Error::DanglingReference { kind, id },
            other => other,
        })?;
        spec.properties.iter().try_fold(table, |t, p| match spec.unit_overrides.get(p) {
            Some(unit) => t.convert_column(&self.catalog, p, unit),
            None => Ok(t),
        })?;
        let id = store.save_comparison(spec)?;
        self.swap(Snapshot {
            store,
            index: current.index.clone(),
        });
        Ok(id)
    }
}
