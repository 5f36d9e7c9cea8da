//! The staged pipeline. Every stage reads the artifacts of the previous
//! stages from the output directory and writes its own, so any stage can be
//! rerun on its own.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use geo::{BoundingRect, Centroid, Coord, Polygon, Rect};
use geojson::JsonValue;
use serde::{Deserialize, Serialize};
use urbanform_core::clustering::{
    adjusted_rand_index, assign_labels, canonical_labels, fit_gmm, impute_median, select_k, supported_components,
    BicPoint, ColumnImputation, GmmModel, GmmOptions, Pca, Standardization,
};
use urbanform_core::context::{compute_context_matrix, ContextColumnReport, ContextOptions, GlobalBins};
use urbanform_core::taxonomy::{
    cluster_centroids, combine_pools, plain_leaves, ward_linkage, CityPool, PoolScaling, Taxonomy,
};
use urbanform_core::validation::{associate, cross_tabulate, Association};
use urbanform_core::{ContiguityGraph, Matrix, Table};

use crate::characters::{compute_primary_characters, core_registry, CharacterDescriptor, CharacterReport};
use crate::config::{PipelineConfig, PoolScalingConfig};
use crate::contiguity::build_contiguity;
use crate::enclosures::{assign_cells_to_blocks, generate_enclosures};
use crate::error::{Error, Result};
use crate::ingest::{load_buildings, load_streets, BuildingSet, IngestConfig, IngestReport, StreetReport};
use crate::io;
use crate::network::{build_street_graph, NetworkGraph, StreetNetwork};
use crate::tessellation::{morphological_tessellation, CellSet, TessellationReport};

pub const BUILDINGS: &str = "buildings.geojson";
pub const CELLS: &str = "cells.geojson";
pub const CONTIGUITY: &str = "contiguity.csv";
pub const NETWORK: &str = "network.json";
pub const PRIMARY: &str = "primary.csv";
pub const CONTEXT: &str = "context.csv";
pub const MODEL: &str = "model.json";
pub const LABELS: &str = "labels.csv";
pub const CELLS_LABELED: &str = "cells_labeled.geojson";
pub const CENTROIDS: &str = "centroids.json";
pub const TAXONOMY: &str = "taxonomy.json";
pub const VALIDATION: &str = "validation.json";
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

/// A configured run over one output directory.
pub struct Pipeline {
    pub config: PipelineConfig,
}

#[derive(Debug, Serialize)]
struct TessellateMeta<'a> {
    ingest: &'a IngestReport,
    tessellation: &'a TessellationReport,
}

#[derive(Debug, Serialize)]
struct GraphMeta {
    cells: usize,
    contiguity_edges: usize,
    isolated_cells: usize,
    streets: Option<StreetReport>,
    blocks: usize,
    unassigned_cells: usize,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct PrimaryMeta {
    characters: Vec<CharacterDescriptor>,
    report: CharacterReport,
}

#[derive(Debug, Serialize)]
struct ContextMeta {
    order: usize,
    bins: usize,
    block_constrained: bool,
    quantile_method: &'static str,
    columns: Vec<ContextColumnReport>,
}

/// Everything needed to reproduce the cluster space and labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterArtifact {
    /// Context columns kept after imputation, in model order.
    pub columns: Vec<String>,
    pub imputation: Vec<ColumnImputation>,
    pub standardization: Standardization,
    pub pca: Option<Pca>,
    pub k: usize,
    /// `bic-elbow` or `forced`.
    pub selection: String,
    pub curve: Vec<BicPoint>,
    pub warnings: Vec<String>,
    /// Components are ordered so that component `i` is label `i`.
    pub model: GmmModel,
}

struct ClusterSpace {
    x: Matrix,
    raw: Matrix,
    columns: Vec<String>,
    imputation: Vec<ColumnImputation>,
    standardization: Standardization,
    pca: Option<Pca>,
}

/// Raw centroids of this run's types, for pooling with other cities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentroidArtifact {
    pub city: String,
    pub columns: Vec<String>,
    pub type_ids: Vec<usize>,
    pub centroids: Matrix,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxonomyArtifact {
    /// Why no dendrogram was built, if none was.
    pub skipped: Option<String>,
    pub pooled_cities: Vec<String>,
    pub taxonomy: Option<Taxonomy>,
    pub cophenetic_correlation: Option<f64>,
    /// Branch of every leaf, in leaf order.
    pub branches: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerValidation {
    pub layer: String,
    pub uncategorised: usize,
    pub folded: Vec<String>,
    pub association: Association,
}

fn labels_from_rows(rows: &[Vec<String>], path: &Path) -> Result<(Vec<String>, Vec<usize>)> {
    let mut ids = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for r in rows {
        ids.push(r[0].clone());
        labels.push(r[1].parse().map_err(|_| Error::data(format!("{}: bad label `{}`", path.display(), r[1])))?);
    }
    Ok((ids, labels))
}

/// Reorders the components so that component `order[i]` becomes `i`.
fn reorder_components(model: &mut GmmModel, order: &[usize]) {
    model.weights = order.iter().map(|&c| model.weights[c]).collect();
    model.means = order.iter().map(|&c| model.means[c].clone()).collect();
    model.covariances = order.iter().map(|&c| model.covariances[c].clone()).collect();
}

fn rect_polygon(r: Rect, pad: f64) -> Polygon {
    let (min, max) = (r.min(), r.max());
    Rect::new(Coord { x: min.x - pad, y: min.y - pad }, Coord { x: max.x + pad, y: max.y + pad }).to_polygon()
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Self { config }
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.config.output.directory.join(name)
    }

    fn read_cells(&self) -> Result<CellSet> {
        io::read_cells(&self.out(CELLS))
    }

    fn read_graph(&self, ids: &[String]) -> Result<ContiguityGraph> {
        io::read_contiguity(&self.out(CONTIGUITY), ids)
    }

    fn read_network(&self) -> Result<io::NetworkArtifact> {
        io::read_json(&self.out(NETWORK), "graph")
    }

    fn run_tessellate(&self) -> Result<()> {
        let c = &self.config;
        io::ensure_dir(&c.output.directory)?;
        let ingest = IngestConfig {
            id_property: c.input.id_property.clone(),
            height_property: c.input.height_property.clone(),
            assume_projected: c.input.assume_projected,
        };
        let (buildings, report) = load_buildings(&c.input.buildings, &ingest)?;
        log::info!("ingested {} buildings ({} repaired, {} skipped)", report.loaded, report.repaired, report.skipped);
        let (cells, tess) = morphological_tessellation(&buildings, &c.tessellation)?;
        log::info!("tessellated {} cells from {} sites", cells.len(), tess.sites);
        io::write_buildings(&self.out(BUILDINGS), &buildings)?;
        io::write_cells(&self.out(CELLS), &cells, None)?;
        io::write_json(&self.out("tessellation_report.json"), &TessellateMeta { ingest: &report, tessellation: &tess })
    }

    fn run_graph(&self) -> Result<()> {
        let c = &self.config;
        let cells = self.read_cells()?;
        let buildings = io::read_buildings(&self.out(BUILDINGS))?;
        let polygons = cells.polygons();
        let ids: Vec<String> = cells.cells.iter().map(|c| c.building_id.clone()).collect();
        let graph = build_contiguity(&polygons, c.graph.contiguity)?;
        io::write_contiguity(&self.out(CONTIGUITY), &ids, &graph)?;

        let (network, street_report) = match &c.input.streets {
            Some(path) => {
                let (net, report) = load_streets(path, c.input.snap_tolerance)?;
                (net, Some(report))
            }
            None => {
                log::warn!("no street input; street characters will be missing");
                (StreetNetwork::default(), None)
            }
        };
        io::write_streets(&self.out("streets.geojson"), &network)?;

        let extent = polygons
            .iter()
            .filter_map(BoundingRect::bounding_rect)
            .reduce(|a, b| {
                Rect::new(
                    Coord { x: a.min().x.min(b.min().x), y: a.min().y.min(b.min().y) },
                    Coord { x: a.max().x.max(b.max().x), y: a.max().y.max(b.max().y) },
                )
            })
            .map(|r| rect_polygon(r, 1.0))
            .ok_or_else(|| Error::data("no cells to build a graph from"))?;
        let blocks = generate_enclosures(&network, &extent, c.input.snap_tolerance);
        let cell_block = assign_cells_to_blocks(&polygons, &blocks);
        io::write_blocks(&self.out("blocks.geojson"), &blocks)?;

        let centroid = |p: &Polygon| p.centroid().map_or_else(|| p.exterior().0[0], |c| c.0);
        let cell_points: Vec<Coord> = polygons.iter().map(centroid).collect();
        let building_points: Vec<Coord> = buildings.buildings.iter().map(|b| centroid(&b.footprint)).collect();
        let links = build_street_graph(network, &cell_points, &building_points);

        let meta = GraphMeta {
            cells: ids.len(),
            contiguity_edges: graph.edge_count(),
            isolated_cells: (0..graph.len()).filter(|&i| graph.degree(i) == 0).count(),
            streets: street_report,
            blocks: blocks.len(),
            unassigned_cells: cell_block.iter().filter(|b| b.is_none()).count(),
            warnings: blocks.warnings.clone(),
        };
        log::info!("contiguity has {} edges; {} blocks", meta.contiguity_edges, meta.blocks);
        io::write_json(&self.out(NETWORK), &io::NetworkArtifact::new(&links, blocks.len(), cell_block))?;
        io::write_json(&self.out("graph_report.json"), &meta)
    }

    fn run_characters(&self) -> Result<()> {
        let cells = self.read_cells()?;
        let buildings: BuildingSet = io::read_buildings(&self.out(BUILDINGS))?;
        let ids: Vec<String> = cells.cells.iter().map(|c| c.building_id.clone()).collect();
        let graph = self.read_graph(&ids)?;
        let network: NetworkGraph = self.read_network()?.graph();
        let registry = core_registry();
        let primary = compute_primary_characters(&buildings, &cells, &graph, &network, &registry)?;
        log::info!("computed {} primary characters for {} cells", primary.table.cols(), primary.table.rows());
        io::write_table(&self.out(PRIMARY), &ids, &primary.table)?;
        io::write_json(&self.out("primary_meta.json"), &PrimaryMeta { characters: registry, report: primary.report })
    }

    fn run_context(&self) -> Result<()> {
        let c = &self.config.context;
        let (ids, primary) = io::read_table(&self.out(PRIMARY), "characters")?;
        let graph = self.read_graph(&ids)?;
        let blocks = if self.config.graph.block_constrained { Some(self.read_network()?.cell_block) } else { None };
        let bins = GlobalBins::from_table(&primary, c.bins);
        let options = ContextOptions { order: c.order, blocks };
        let out = compute_context_matrix(&primary, &graph, &bins, &options)?;
        log::info!("context matrix has {} columns", out.matrix.cols());
        io::write_json(&self.out("bins.json"), &bins)?;
        io::write_table(&self.out(CONTEXT), &ids, &out.matrix)?;
        let meta = ContextMeta {
            order: c.order,
            bins: c.bins,
            block_constrained: self.config.graph.block_constrained,
            quantile_method: urbanform_core::stats::QUANTILE_METHOD,
            columns: out.report,
        };
        io::write_json(&self.out("context_meta.json"), &meta)
    }

    /// Imputed and standardised context matrix, plus PCA when enabled.
    fn cluster_space(&self, context: &Table) -> ClusterSpace {
        let c = &self.config.clustering;
        let imputed = impute_median(context, c.max_missing_rate);
        for col in imputed.report.iter().filter(|r| r.dropped) {
            log::warn!("dropped column {} ({:.1}% missing)", col.column, 100.0 * col.missing_rate);
        }
        let standardization = Standardization::fit(&imputed.matrix);
        let mut x = standardization.apply(&imputed.matrix);
        let mut pca = None;
        if c.pca_guard && x.cols() * 10 > x.rows() {
            let p = Pca::fit(&x, c.pca_variance);
            log::warn!(
                "{} columns for {} rows; clustering on {} principal components",
                x.cols(),
                x.rows(),
                p.components.len()
            );
            x = p.transform(&x);
            pca = Some(p);
        }
        ClusterSpace {
            x,
            raw: imputed.matrix,
            columns: imputed.columns,
            imputation: imputed.report,
            standardization,
            pca,
        }
    }

    fn run_cluster(&self, forced_k: Option<usize>) -> Result<()> {
        let c = &self.config.clustering;
        let (ids, context) = io::read_table(&self.out(CONTEXT), "context")?;
        let ClusterSpace { x, columns, imputation, standardization, pca, .. } = self.cluster_space(&context);
        if x.cols() == 0 {
            return Err(Error::data("no usable context columns"));
        }
        let options = GmmOptions {
            covariance: c.covariance,
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
            regularization: c.regularization,
        };
        let supported = supported_components(x.rows(), x.cols(), c.covariance);
        let mut warnings = Vec::new();
        let (mut model, curve, selection) = match forced_k.or(c.k) {
            Some(k) => {
                // Best of the configured seeds.
                let mut best: Option<GmmModel> = None;
                let mut last_error = None;
                for s in 0..c.seeds_per_k as u64 {
                    match fit_gmm(&x, k, c.seed.wrapping_add(s), &options) {
                        Ok(m) if best.as_ref().is_none_or(|b| m.log_likelihood > b.log_likelihood) => best = Some(m),
                        Ok(_) => {}
                        Err(e) => last_error = Some(e),
                    }
                }
                let model = match (best, last_error) {
                    (Some(m), _) => m,
                    (None, Some(e)) => return Err(e.into()),
                    (None, None) => unreachable!("at least one seed"),
                };
                (model, Vec::new(), "forced")
            }
            None => {
                let k_max = c.k_max.min(supported);
                if k_max < c.k_max {
                    warnings.push(format!("k_max lowered from {} to {k_max}: too few cells per component", c.k_max));
                }
                let k_min = c.k_min.min(k_max);
                let sel = select_k(&x, k_min, k_max, c.seeds_per_k, c.seed, &options)?;
                warnings.extend(sel.warnings.iter().cloned());
                let model = sel.model(sel.k).expect("selected K was fitted").clone();
                (model, sel.curve, "bic-elbow")
            }
        };
        for w in &warnings {
            log::warn!("{w}");
        }
        let labeling = assign_labels(&model, &x)?;
        let labels = canonical_labels(&labeling.labels);
        // Components in order of first appearance, then the unused ones.
        let mut order: Vec<usize> = Vec::new();
        for &l in &labeling.labels {
            if !order.contains(&l) {
                order.push(l);
            }
        }
        let unused: Vec<usize> = (0..model.components()).filter(|c| !order.contains(c)).collect();
        order.extend(unused);
        reorder_components(&mut model, &order);
        model.standardization = Some(standardization.clone());
        let k = model.components();
        log::info!("clustered {} cells into K={k} ({selection})", labels.len());

        io::write_rows(
            &self.out("bic.csv"),
            &["k", "bic", "log_likelihood", "seed", "failed_seeds"],
            curve.iter().map(|p| {
                [
                    p.k.to_string(),
                    p.bic.to_string(),
                    p.log_likelihood.to_string(),
                    p.seed.to_string(),
                    p.failed_seeds.to_string(),
                ]
            }),
        )?;
        io::write_rows(
            &self.out(LABELS),
            &["id", "label"],
            ids.iter().zip(&labels).map(|(id, l)| [id.clone(), l.to_string()]),
        )?;
        if c.write_responsibilities {
            let mut header = vec!["id".to_string()];
            header.extend((0..k).map(|j| format!("p{j}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            io::write_rows(
                &self.out("responsibilities.csv"),
                &header,
                ids.iter().enumerate().map(|(i, id)| {
                    let r = labeling.responsibilities.row(i);
                    std::iter::once(id.clone()).chain(order.iter().map(|&c| r[c].to_string())).collect::<Vec<_>>()
                }),
            )?;
        }
        let cells = self.read_cells()?;
        let extra: Vec<io::CellProperties> = labels.iter().map(|&l| vec![("label", JsonValue::from(l))]).collect();
        io::write_cells(&self.out(CELLS_LABELED), &cells, Some(&extra))?;
        let artifact = ClusterArtifact {
            columns,
            imputation,
            standardization,
            pca,
            k,
            selection: selection.to_string(),
            curve,
            warnings,
            model,
        };
        io::write_json(&self.out(MODEL), &artifact)
    }

    fn run_taxonomy(&self) -> Result<()> {
        let t = &self.config.taxonomy;
        let labels_path = self.out(LABELS);
        let (_, rows) = io::read_rows(&labels_path, "cluster")?;
        let (label_ids, labels) = labels_from_rows(&rows, &labels_path)?;
        let artifact: ClusterArtifact = io::read_json(&self.out(MODEL), "cluster")?;
        let (ids, context) = io::read_table(&self.out(CONTEXT), "context")?;
        if ids != label_ids {
            return Err(Error::data("labels and context matrix list different cells"));
        }
        let space = self.cluster_space(&context);
        let columns = space.columns;
        if columns != artifact.columns {
            return Err(Error::data("context matrix changed since clustering; rerun `cluster`"));
        }
        let k = artifact.k;
        // Standardised, not PCA, space: the dendrogram reads in context units.
        let z = space.standardization.apply(&space.raw);
        let scaled = cluster_centroids(&z, &labels, k)?;
        let raw = cluster_centroids(&space.raw, &labels, k)?.matrix;
        let sizes: Vec<usize> = scaled.labels.iter().map(|&l| labels.iter().filter(|&&x| x == l).count()).collect();
        let own = CentroidArtifact {
            city: t.city.clone(),
            columns: columns.clone(),
            type_ids: scaled.labels.clone(),
            centroids: raw.clone(),
            sizes,
        };
        io::write_json(&self.out(CENTROIDS), &own)?;

        let mut pools =
            vec![CityPool { city: own.city.clone(), columns, type_ids: own.type_ids.clone(), centroids: raw }];
        for source in &t.pools {
            let other: CentroidArtifact = io::read_json(&source.directory.join(CENTROIDS), "taxonomy")?;
            pools.push(CityPool {
                city: source.city.clone(),
                columns: other.columns,
                type_ids: other.type_ids,
                centroids: other.centroids,
            });
        }
        let leaf_total: usize = pools.iter().map(|p| p.type_ids.len()).sum();
        let pooled_cities: Vec<String> =
            if pools.len() > 1 { pools.iter().map(|p| p.city.clone()).collect() } else { Vec::new() };

        let mut out = TaxonomyArtifact {
            skipped: None,
            pooled_cities,
            taxonomy: None,
            cophenetic_correlation: None,
            branches: Vec::new(),
        };
        let mut cell_branch: Vec<Option<usize>> = vec![None; labels.len()];
        if leaf_total < 2 {
            let note = format!("{leaf_total} type; a taxonomy needs at least 2");
            log::warn!("taxonomy skipped: {note}");
            out.skipped = Some(note);
        } else {
            let tax = if pools.len() > 1 {
                let scaling = match t.scaling {
                    PoolScalingConfig::Pooled => PoolScaling::Pooled,
                    PoolScalingConfig::PerCity => PoolScaling::PerCity,
                };
                combine_pools(&pools, scaling)?
            } else {
                ward_linkage(&scaled.matrix, plain_leaves(&scaled.labels))?
            };
            let branches = tax.cut(t.branches.min(leaf_total))?;
            // This city's leaves come first in the pooled order.
            let branch_of: HashMap<usize, usize> =
                scaled.labels.iter().enumerate().map(|(i, &l)| (l, branches[i])).collect();
            for (b, l) in cell_branch.iter_mut().zip(&labels) {
                *b = branch_of.get(l).copied();
            }
            io::write_text(&self.out("taxonomy.nwk"), &format!("{}\n", tax.newick()))?;
            io::write_rows(
                &self.out("branches.csv"),
                &["type", "branch"],
                tax.leaves.iter().zip(&branches).map(|(leaf, b)| [leaf.name(), b.to_string()]),
            )?;
            out.cophenetic_correlation = tax.cophenetic_correlation();
            out.branches = branches;
            out.taxonomy = Some(tax);
            log::info!("taxonomy over {leaf_total} types");
        }
        let cells = self.read_cells()?;
        let extra: Vec<io::CellProperties> = labels
            .iter()
            .zip(&cell_branch)
            .map(|(&l, b)| vec![("label", JsonValue::from(l)), ("branch", b.map_or(JsonValue::Null, JsonValue::from))])
            .collect();
        io::write_cells(&self.out(CELLS_LABELED), &cells, Some(&extra))?;
        io::write_json(&self.out(TAXONOMY), &out)
    }

    fn run_validate(&self, categories: Option<&Path>) -> Result<()> {
        let v = &self.config.validation;
        let path = categories
            .or(self.config.input.categories.as_deref())
            .ok_or_else(|| Error::config("validation needs a categories CSV (input.categories or --categories)"))?;
        let labels_path = self.out(LABELS);
        let (_, rows) = io::read_rows(&labels_path, "cluster")?;
        let (ids, labels) = labels_from_rows(&rows, &labels_path)?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.first().map(String::as_str) != Some("id") || header.len() < 2 {
            return Err(Error::data(format!(
                "{}: expected an `id` column followed by category layers",
                path.display()
            )));
        }
        let mut by_id: HashMap<String, Vec<String>> = HashMap::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
            let mut fields = rec.iter().map(str::to_string);
            let id = fields.next().unwrap_or_default();
            by_id.insert(id, fields.collect());
        }
        let mut results = Vec::new();
        for (layer_index, layer) in header[1..].iter().enumerate() {
            let cats: Vec<Option<String>> = ids
                .iter()
                .map(|id| by_id.get(id).and_then(|f| f.get(layer_index)).filter(|s| !s.is_empty()).cloned())
                .collect();
            let tab = cross_tabulate(&labels, &cats, v.min_share)?;
            let association = associate(&tab.table, v.yates, v.bias_corrected)?;
            log::info!("{layer}: chi2 = {:.3}, V = {:.3}", association.chi_squared.statistic, association.cramers_v);
            io::write_text(&self.out(&format!("contingency_{layer}.csv")), &tab.table.to_string())?;
            results.push(LayerValidation {
                layer: layer.clone(),
                uncategorised: tab.uncategorised,
                folded: tab.folded,
                association,
            });
        }
        io::write_json(&self.out(VALIDATION), &results)
    }

    /// Ingests the buildings and computes their cells.
    pub fn tessellate(&self) -> Result<()> {
        self.run_tessellate()?;
        self.echo_config()
    }

    /// Contiguity, the street graph, blocks and the cell links.
    pub fn graph(&self) -> Result<()> {
        self.run_graph()?;
        self.echo_config()
    }

    pub fn characters(&self) -> Result<()> {
        self.run_characters()?;
        self.echo_config()
    }

    pub fn context(&self) -> Result<()> {
        self.run_context()?;
        self.echo_config()
    }

    /// Fits the mixture, with `forced_k` overriding the configured range.
    pub fn cluster(&self, forced_k: Option<usize>) -> Result<()> {
        self.run_cluster(forced_k)?;
        self.echo_config()
    }

    /// Centroids, Ward dendrogram and branch cut.
    pub fn taxonomy(&self) -> Result<()> {
        self.run_taxonomy()?;
        self.echo_config()
    }

    /// Association of the labels with every column of the categories CSV.
    pub fn validate(&self, categories: Option<&Path>) -> Result<()> {
        self.run_validate(categories)?;
        self.echo_config()
    }

    /// Records the configuration a stage ran with next to its outputs.
    fn echo_config(&self) -> Result<()> {
        io::write_text(&self.out(RESOLVED_CONFIG), &self.config.to_toml())
    }

    /// All stages in order; validation runs when categories are configured.
    pub fn run(&self) -> Result<()> {
        self.tessellate()?;
        self.graph()?;
        self.characters()?;
        self.context()?;
        self.cluster(None)?;
        self.taxonomy()?;
        if self.config.input.categories.is_some() {
            self.validate(None)?;
        } else {
            log::info!("no categories configured; validation skipped");
        }
        Ok(())
    }
}

/// Agreement of a label file with reference labels keyed by cell id.
pub fn label_agreement(labels_csv: &Path, reference: &HashMap<String, usize>) -> Result<f64> {
    let (_, rows) = io::read_rows(labels_csv, "cluster")?;
    let (ids, labels) = labels_from_rows(&rows, labels_csv)?;
    let truth = ids
        .iter()
        .map(|id| reference.get(id).copied().ok_or_else(|| Error::data(format!("no reference label for {id}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(adjusted_rand_index(&labels, &truth))
}
