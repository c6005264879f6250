use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use unitfacet_core::comparison::{Cell, CellStatus, ComparisonTable, ExportFormat};
use unitfacet_core::facet::{FacetIndex, FilterSpec, Predicate};
use unitfacet_core::number::{format_decimal, parse_decimal};
use unitfacet_core::store::{GraphStore, StatementValue};
use unitfacet_core::{Catalog, Error, ErrorClass, ErrorCode, Result};
use unitfacet_service::routes::{ConvertResponse, SearchResponse};
use unitfacet_service::{router, serve, AppState};

#[derive(Parser, Debug)]
#[command(name = "unitfacet", version, about = "Unit-aware faceted search over a research knowledge graph")]
struct Cli {
    /// Store directory (graph.jsonl, comparisons.jsonl).
    #[arg(long, global = true, env = "UNITFACET_STORE", default_value = "unitfacet-store")]
    store: PathBuf,

    /// Unit registry file; the bundled seed registry when omitted.
    #[arg(long, global = true, env = "UNITFACET_REGISTRY")]
    registry: Option<PathBuf>,

    /// Quantity-kind snapshot file; the bundled snapshot when omitted.
    #[arg(long, global = true, env = "UNITFACET_SNAPSHOT")]
    snapshot: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a value between two unit codes.
    #[command(allow_negative_numbers = true)]
    Convert {
        #[arg(value_parser = decimal)]
        value: f64,
        source: String,
        target: String,
    },
    /// Ingest a line-delimited JSON file into the store.
    Ingest { file: PathBuf },
    /// List contributions whose values satisfy a unit-qualified predicate.
    Search(SearchArgs),
    /// Facet summary for one property.
    Facets {
        #[arg(long)]
        property: String,
        #[arg(long)]
        unit: Option<String>,
        #[arg(long)]
        quantity_kind: Option<String>,
    },
    /// Show a contribution's statements in structured form.
    Show { contribution: String },
    /// Build, convert, export, or save a comparison table.
    Compare(CompareArgs),
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "UNITFACET_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Allowed CORS origin for the web UI.
        #[arg(long, env = "UNITFACET_CORS_ORIGIN")]
        cors_origin: Option<String>,
    },
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("predicate").required(true).args(["gt", "lt", "eq", "within", "exclude"])))]
struct SearchArgs {
    #[arg(long)]
    property: String,
    #[arg(long, allow_negative_numbers = true, value_parser = decimal)]
    gt: Option<f64>,
    #[arg(long, allow_negative_numbers = true, value_parser = decimal)]
    lt: Option<f64>,
    #[arg(long, allow_negative_numbers = true, value_parser = decimal)]
    eq: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], allow_negative_numbers = true, value_parser = decimal)]
    within: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], allow_negative_numbers = true, value_parser = decimal)]
    exclude: Option<Vec<f64>>,
    /// Unit of the operands.
    #[arg(long)]
    unit: String,
    #[arg(long)]
    quantity_kind: Option<String>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Comma-separated contribution ids (row order).
    #[arg(long, value_delimiter = ',', required_unless_present = "open")]
    contributions: Vec<String>,
    /// Comma-separated property ids (column order).
    #[arg(long, value_delimiter = ',', required_unless_present = "open")]
    properties: Vec<String>,
    /// Display unit for a column, as PROPERTY=CODE. Repeatable.
    #[arg(long = "unit", value_parser = override_pair)]
    units: Vec<(String, String)>,
    /// Persist the view and print its id.
    #[arg(long)]
    save: bool,
    /// Render a saved view instead of building one.
    #[arg(long, conflicts_with_all = ["contributions", "properties", "units", "save"])]
    open: Option<String>,
    /// Print the table as csv or json.
    #[arg(long)]
    export: Option<String>,
}

fn decimal(s: &str) -> std::result::Result<f64, String> {
    parse_decimal(s).ok_or_else(|| format!("{s:?} is not a finite decimal number"))
}

fn override_pair(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((p, u)) if !p.is_empty() && !u.is_empty() => Ok((p.to_string(), u.to_string())),
        _ => Err(format!("expected PROPERTY=CODE, got {s:?}")),
    }
}

fn exit_code(code: ErrorCode) -> u8 {
    match code.class() {
        ErrorClass::Validation => 3,
        ErrorClass::NotFound => 4,
        ErrorClass::Incommensurable => 5,
        ErrorClass::Internal => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.code();
            match format {
                Format::Human => eprintln!("{}: {e}", code.as_str()),
                Format::Structured => eprintln!(
                    "{}",
                    json!({"code": code, "message": e.to_string(), "details": e.details()})
                ),
            }
            ExitCode::from(exit_code(code))
        }
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<()> {
    let catalog = Catalog::load(cli.registry.as_deref(), cli.snapshot.as_deref())?;
    let format = cli.format;
    match cli.command {
        Command::Convert { value, source, target } => {
            let r = catalog.registry.convert_codes(value, &source, &target)?;
            match format {
                Format::Human => println!("{}", format_decimal(r.value)),
                Format::Structured => print_json(&ConvertResponse {
                    value: r.value,
                    source,
                    target,
                }),
            }
        }
        Command::Ingest { file } => {
            let mut store = GraphStore::open(&cli.store, &catalog)?;
            let report = store.ingest_file(&catalog, &file)?;
            match format {
                Format::Human => {
                    println!(
                        "{} papers, {} properties, {} contributions, {} statements ingested; {} rejected",
                        report.papers, report.properties, report.contributions, report.statements, report.rejected
                    );
                    for d in &report.diagnostics {
                        eprintln!("line {} ({}): {}: {}", d.line, d.id, d.code.as_str(), d.message);
                    }
                }
                Format::Structured => print_json(&report),
            }
        }
        Command::Search(args) => {
            let index = open_index(&cli.store, &catalog)?;
            let filter = FilterSpec {
                property: args.property,
                quantity_kind: args.quantity_kind,
                predicate: predicate(args.gt, args.lt, args.eq, args.within, args.exclude),
                unit: args.unit,
            };
            let ids = index.apply_filters(&catalog, &[filter])?;
            match format {
                Format::Human => ids.iter().for_each(|id| println!("{id}")),
                Format::Structured => print_json(&SearchResponse {
                    total: ids.len(),
                    contributions: ids,
                }),
            }
        }
        Command::Facets {
            property,
            unit,
            quantity_kind,
        } => {
            let index = open_index(&cli.store, &catalog)?;
            let f = index.generate_facets(&catalog, &property, quantity_kind.as_deref(), unit.as_deref())?;
            match format {
                Format::Human => {
                    println!("{} ({}), {} values", f.property_label, f.quantity_kind_label, f.count);
                    println!("range: {} .. {} {}", format_decimal(f.min), format_decimal(f.max), f.display_unit);
                    for o in &f.unit_options {
                        println!("  {}{}  {}", o.code, if o.observed { " *" } else { "" }, o.label);
                    }
                }
                Format::Structured => print_json(&f),
            }
        }
        Command::Show { contribution } => {
            let store = GraphStore::open(&cli.store, &catalog)?;
            let c = store.get_contribution(&contribution)?;
            let lines: Vec<(String, String)> = c
                .statements
                .iter()
                .map(|s| {
                    let label = store.property(&s.property_id).map_or(s.property_id.clone(), |p| p.label.clone());
                    let text = match &s.value {
                        StatementValue::Literal(t) => t.clone(),
                        StatementValue::Quantity(q) => catalog.structured(q),
                    };
                    (label, text)
                })
                .collect();
            match format {
                Format::Human => {
                    println!("{} ({})", c.label, c.id);
                    for (label, text) in &lines {
                        println!("  {label}: {text}");
                    }
                }
                Format::Structured => print_json(&json!({
                    "id": c.id,
                    "label": c.label,
                    "paper": c.paper_id,
                    "statements": lines.iter().map(|(p, v)| json!({"property": p, "value": v})).collect::<Vec<_>>(),
                })),
            }
        }
        Command::Compare(args) => compare(&cli.store, &catalog, format, args)?,
        Command::Serve { addr, cors_origin } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let state = Arc::new(AppState::open(&cli.store, catalog)?);
            let app = router(state, cors_origin.as_deref())
                .map_err(|e| Error::Invalid(format!("invalid CORS origin: {e}")))?;
            tokio::runtime::Runtime::new()?.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                serve(listener, app).await
            })?;
        }
    }
    Ok(())
}

fn open_index(dir: &Path, catalog: &Catalog) -> Result<FacetIndex> {
    let store = GraphStore::open(dir, catalog)?;
    Ok(FacetIndex::build(&store, catalog))
}

fn predicate(gt: Option<f64>, lt: Option<f64>, eq: Option<f64>, within: Option<Vec<f64>>, exclude: Option<Vec<f64>>) -> Predicate {
    match (gt, lt, eq, within, exclude) {
        (Some(x), ..) => Predicate::Gt(x),
        (_, Some(x), ..) => Predicate::Lt(x),
        (_, _, Some(x), ..) => Predicate::Eq(x),
        (.., Some(r), _) => Predicate::Within { min: r[0], max: r[1] },
        (.., Some(r)) => Predicate::Exclude { min: r[0], max: r[1] },
        _ => unreachable!("clap requires one predicate"),
    }
}

fn compare(dir: &Path, catalog: &Catalog, format: Format, args: CompareArgs) -> Result<()> {
    let export = args.export.as_deref().map(str::parse::<ExportFormat>).transpose()?;
    let mut store = GraphStore::open(dir, catalog)?;
    let (table, id) = match &args.open {
        Some(id) => {
            let saved = store.load_comparison(id)?;
            (ComparisonTable::render_saved(&store, catalog, saved)?, Some(id.clone()))
        }
        None => {
            let units: BTreeMap<String, String> = args.units.into_iter().collect();
            let mut table = ComparisonTable::build(&store, &args.contributions, &args.properties)?;
            if let Some(p) = units.keys().find(|p| !args.properties.contains(p)) {
                return Err(Error::Invalid(format!("unit override for unselected property {p:?}")));
            }
            for p in &args.properties {
                if let Some(u) = units.get(p) {
                    table = table.convert_column(catalog, p, u)?;
                }
            }
            let id = if args.save { Some(table.save_view(&mut store)?) } else { None };
            (table, id)
        }
    };

    if let (Some(id), None) = (&id, args.open.as_ref()) {
        eprintln!("saved: {id}");
    }
    match (export, format) {
        (Some(f), _) => print!("{}", table.export(f)?),
        (None, Format::Structured) => print_json(&json!({"id": id, "table": table})),
        (None, Format::Human) => print!("{}", render_text(&table)),
    }
    Ok(())
}

/// Plain-text grid. Converted cells end in `*`, inconvertible ones in `!`.
fn render_text(table: &ComparisonTable) -> String {
    let mut grid = vec![std::iter::once("contribution".to_string())
        .chain(table.columns.iter().map(|c| match &c.display_unit {
            Some(u) => format!("{} [{u}]", c.label),
            None => c.label.clone(),
        }))
        .collect::<Vec<_>>()];
    for (row, cells) in table.rows.iter().zip(&table.cells) {
        let mut line = vec![row.contribution_id.clone()];
        line.extend(cells.iter().map(|cell| match cell {
            Cell::Absent => "-".to_string(),
            Cell::Literal { value } => value.clone(),
            Cell::Quantity(q) => {
                let mark = match q.status {
                    CellStatus::Original => "",
                    CellStatus::Converted => "*",
                    CellStatus::Inconvertible => "!",
                };
                format!("{} {}{mark}", format_decimal(q.value), q.unit)
            }
        }));
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &grid {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
