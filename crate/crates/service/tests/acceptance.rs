//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tower::ServiceExt;
use unitfacet_core::comparison::ComparisonTable;
use unitfacet_core::facet::{FacetIndex, FilterSpec};
use unitfacet_core::store::{GraphStore, GRAPH_FILE};
use unitfacet_core::ucum::Dimension;
use unitfacet_core::Catalog;
use unitfacet_service::{convert_path, router, serve, AppState, CONVERT_ROUTE};

const FACTORS: &str = include_str!("../../core/fixtures/conversion_factors.tsv");
const TABLE1: &str = include_str!("../../core/fixtures/table1.jsonl");
const SEA_LEVEL: &str = include_str!("../../core/fixtures/sea_level.jsonl");

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn conversion_fixture_suite(catalog: &Catalog) -> Outcome {
    let start = Instant::now();
    let mut n = 0;
    for line in FACTORS.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let (value, source, target, expected): (f64, &str, &str, f64) =
            (f[0].parse().unwrap(), f[1], f[2], f[3].parse().unwrap());
        let got = catalog
            .registry
            .convert_codes(value, source, target)
            .map_err(|e| format!("{value} {source} -> {target}: {e}"))?
            .value;
        check((got - expected).abs() <= 1e-9 * expected.abs().max(got.abs()), || {
            format!("{value} {source} -> {target}: got {got}, expected {expected}")
        })?;
        n += 1;
    }
    let elapsed = start.elapsed();
    check(n == 6, || format!("expected 6 fixture rows, found {n}"))?;
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{n} cases in {elapsed:?}"))
}

fn round_trip(catalog: &Catalog) -> Outcome {
    let reg = &catalog.registry;
    let mut pool: Vec<(String, Dimension)> = Vec::new();
    for atom in reg.atoms() {
        pool.push((atom.code.clone(), atom.dimension));
        if atom.metric && !atom.is_affine() {
            pool.extend(reg.prefixes().iter().map(|p| (format!("{}{}", p.code, atom.code), atom.dimension)));
        }
    }
    let convert = |v: f64, a: &str, b: &str| reg.convert_codes(v, a, b).map(|r| r.value);
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let mut failures = Vec::new();
    for _ in 0..10_000 {
        let (a, dim) = pool.choose(&mut rng).unwrap().clone();
        let same: Vec<&String> = pool.iter().filter(|(_, d)| *d == dim).map(|(c, _)| c).collect();
        let b = same.choose(&mut rng).unwrap().to_string();
        let v: f64 = format!("{}e{}", rng.gen_range(-999_999i64..=999_999), rng.gen_range(-6..=6)).parse().unwrap();
        let back = convert(v, &a, &b).and_then(|t| convert(t, &b, &a)).map_err(|e| e.to_string())?;
        // tolerance relative to the largest magnitude involved, offsets included
        let offset = convert(0.0, &b, &a).map_err(|e| e.to_string())?.abs();
        if (back - v).abs() > 1e-9 * v.abs().max(back.abs()).max(offset) {
            failures.push(format!("{v} {a} -> {b} -> {back}"));
        }
    }
    check(failures.is_empty(), || format!("{} failures, first: {}", failures.len(), failures[0]))?;
    Ok(format!("10000 cases over {} unit codes, 0 failures", pool.len()))
}

fn filter_oracle(catalog: &Catalog) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1_000);
    let (mut queries, mut largest) = (0, 0);
    for store_no in 0..1_000 {
        let rs = common::random_store(&mut rng, catalog, 200);
        largest = largest.max(rs.store.contribution_ids().count());
        let index = FacetIndex::build(&rs.store, catalog);
        for _ in 0..3 {
            let filters: Vec<FilterSpec> = (0..rng.gen_range(0..=3))
                .map(|_| common::random_filter(&mut rng, catalog, &rs))
                .collect();
            let got = index.apply_filters(catalog, &filters).map_err(|e| e.to_string())?;
            let want = common::oracle(catalog, &rs.store, &filters);
            check(got == want, || format!("store {store_no}: {filters:?}: index {got:?} vs scan {want:?}"))?;
            queries += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 stores (up to {largest} contributions), {queries} filter sets, exact match, {elapsed:?}"))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, b) = send(app, req).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn heterogeneous_retrieval() -> Outcome {
    let state = AppState::new(Catalog::bundled(), GraphStore::in_memory());
    state.ingest(SEA_LEVEL).map_err(|e| e.to_string())?;
    let app = router(Arc::new(state), None).unwrap();
    let both = json!(["C-SLR-A", "C-SLR-B"]);
    let mut seen = Vec::new();
    // at least 20 cm, written as a closed interval and as a strict bound
    for (filter, label) in [
        (json!({"property": "sea-level", "comparator": "within", "min": 20, "max": 1e12, "unit": "cm"}), ">= 20 cm"),
        (json!({"property": "sea-level", "comparator": "within", "min": 0.2, "max": 1e10, "unit": "m"}), ">= 0.2 m"),
        (json!({"property": "sea-level", "comparator": "gt", "value": 20, "unit": "cm"}), "> 20 cm"),
        (json!({"property": "sea-level", "comparator": "gt", "value": 0.2, "unit": "m"}), "> 0.2 m"),
    ] {
        let (status, body) = post_json(&app, "/api/search", json!({ "filters": [filter] })).await;
        check(status == StatusCode::OK, || format!("{label}: status {status}: {body}"))?;
        check(body["contributions"] == both, || format!("{label}: got {}", body["contributions"]))?;
        seen.push(body);
    }
    check(seen.windows(2).all(|w| w[0] == w[1]), || "phrasings disagree".into())?;
    Ok("0.25 m and 25 cm both retrieved for every phrasing".into())
}

fn table1_reproduction(catalog: &Catalog) -> Outcome {
    let mut store = GraphStore::in_memory();
    store.ingest_str(catalog, TABLE1).map_err(|e| e.to_string())?;
    let expected = [
        ("R756122", "{micro F1 score, 85.6, %}"),
        ("R709075", "{Speed, 25, m/s}"),
        ("R1363174", "{Mass, 75.1, g}"),
    ];
    for (contribution, text) in expected {
        let got: Vec<String> = store
            .statements_of(contribution)
            .filter_map(|s| s.quantity())
            .map(|q| catalog.structured(q))
            .collect();
        check(got == [text], || format!("{contribution}: {got:?}"))?;
    }
    Ok(expected.map(|(_, t)| t).join(" "))
}

async fn endpoint_contract() -> Outcome {
    let app = router(Arc::new(AppState::new(Catalog::bundled(), GraphStore::in_memory())), None).unwrap();
    let (status, body) = get_json(&app, "/api/convert/0.25/from/m/to/cm").await;
    check(status == StatusCode::OK && body["value"] == "25", || format!("0.25 m -> cm: {status} {body}"))?;
    let (status, body) = get_json(&app, "/api/convert/1/from/m/to/s").await;
    check(
        status == StatusCode::UNPROCESSABLE_ENTITY && body["code"] == "INCOMMENSURABLE_UNITS",
        || format!("1 m -> s: {status} {body}"),
    )?;
    let template = "{source_quantity}/from/{source_unit}/to/{target_unit}";
    check(CONVERT_ROUTE.strip_prefix("/api/convert/") == Some(template), || CONVERT_ROUTE.to_string())?;
    let path = convert_path("25", "m/s", "km/h");
    check(path == "/api/convert/25/from/m%2Fs/to/km%2Fh", || path.clone())?;
    let (status, body) = get_json(&app, &path).await;
    check(status == StatusCode::OK && body["value"] == "90", || format!("{path}: {status} {body}"))?;
    Ok(format!("200 value 25; 422 INCOMMENSURABLE_UNITS; {path} -> 90"))
}

async fn non_destructiveness(catalog: &Catalog) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let graph = dir.path().join(GRAPH_FILE);
    let state = Arc::new(AppState::open(dir.path(), catalog.clone()).map_err(|e| e.to_string())?);
    state.ingest(TABLE1).map_err(|e| e.to_string())?;
    let before = std::fs::read(&graph).map_err(|e| e.to_string())?;

    let store = GraphStore::open(dir.path(), catalog).map_err(|e| e.to_string())?;
    let contributions: Vec<String> = store.contribution_ids().map(str::to_string).collect();
    let properties: Vec<String> = store.properties().map(|p| p.id.clone()).collect();
    let table = ComparisonTable::build(&store, &contributions, &properties).map_err(|e| e.to_string())?;
    let targets: Vec<(String, String)> = [("micro-f1", "MicroF1Score"), ("cut-off-wind-speed", "Speed"), ("water-content", "Mass")]
        .iter()
        .flat_map(|(p, k)| common::unit_codes(catalog, k).into_iter().map(move |u| (p.to_string(), u)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut steps = 0;
    for _ in 0..50 {
        let mut t = table.clone();
        for _ in 0..rng.gen_range(1..=8) {
            let (p, u) = targets.choose(&mut rng).unwrap();
            t = t.convert_column(catalog, p, u).map_err(|e| e.to_string())?;
            steps += 1;
        }
        let spec = t.spec();
        state.save_comparison(spec).map_err(|e| e.to_string())?;
    }
    let after = std::fs::read(&graph).map_err(|e| e.to_string())?;
    check(after == before, || format!("{GRAPH_FILE} changed"))?;
    Ok(format!("{steps} column conversions and 50 saved views, {GRAPH_FILE} byte-identical ({} bytes)", before.len()))
}

/// Minimal HTTP/1.1 GET over a real socket.
async fn http_get(addr: std::net::SocketAddr, path: &str) -> Result<(u16, Vec<u8>), String> {
    let mut stream = tokio::net::TcpStream::connect(addr).await.map_err(|e| e.to_string())?;
    let req = format!("GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n");
    stream.write_all(req.as_bytes()).await.map_err(|e| e.to_string())?;
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).await.map_err(|e| e.to_string())?;
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").ok_or("no header terminator")?;
    let head = String::from_utf8_lossy(&raw[..split]).to_string();
    let status = head.split(' ').nth(1).and_then(|s| s.parse().ok()).ok_or("bad status line")?;
    check(head.to_ascii_lowercase().contains("content-length"), || "chunked body".into())?;
    Ok((status, raw[split + 4..].to_vec()))
}

async fn start(dir: &Path) -> Result<(std::net::SocketAddr, tokio::task::JoinHandle<()>), String> {
    let state = AppState::open(dir, Catalog::bundled()).map_err(|e| e.to_string())?;
    let app = router(Arc::new(state), None).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    let handle = tokio::spawn(async move {
        let _ = serve(listener, app).await;
    });
    Ok((addr, handle))
}

async fn saved_view_permanence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    {
        let state = AppState::open(dir.path(), Catalog::bundled()).map_err(|e| e.to_string())?;
        state.ingest(SEA_LEVEL).map_err(|e| e.to_string())?;
    }
    let (addr, server) = start(dir.path()).await?;
    let app = router(Arc::new(AppState::open(dir.path(), Catalog::bundled()).unwrap()), None).unwrap();
    let (status, saved) = post_json(
        &app,
        "/api/comparisons",
        json!({"contributions": ["C-SLR-A", "C-SLR-B"], "properties": ["sea-level", "scenario"], "unitOverrides": {"sea-level": "cm"}}),
    )
    .await;
    check(status == StatusCode::CREATED, || format!("save: {status} {saved}"))?;
    let url = saved["url"].as_str().unwrap().to_string();
    server.abort();
    let _ = server.await;

    // first server never saw the save in memory; a fresh one must serve it from disk
    let (addr2, server2) = start(dir.path()).await?;
    let (s1, first) = http_get(addr2, &url).await?;
    server2.abort();
    let _ = server2.await;
    let (addr3, server3) = start(dir.path()).await?;
    let (s2, second) = http_get(addr3, &url).await?;
    server3.abort();
    let _ = (addr, server3.await);

    check(s1 == 200 && s2 == 200, || format!("statuses {s1} {s2}"))?;
    check(first == second, || "rendered tables differ across restart".into())?;
    let body: Value = serde_json::from_slice(&first).map_err(|e| e.to_string())?;
    let cell = &body["cells"][0][0];
    check(cell["value"] == "25" && cell["unit"] == "cm" && cell["converted"] == true, || cell.to_string())?;
    Ok(format!("{url} identical across restart ({} bytes)", first.len()))
}

fn report(name: &str, outcome: Outcome, failed: &mut usize) {
    match outcome {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(why) => {
            *failed += 1;
            println!("FAIL  {name}: {why}");
        }
    }
}

fn main() {
    let catalog = Catalog::bundled();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let mut failed = 0;
    report("conversion fixture suite", conversion_fixture_suite(&catalog), &mut failed);
    report("round-trip identity", round_trip(&catalog), &mut failed);
    report("filter-oracle equivalence", filter_oracle(&catalog), &mut failed);
    report("heterogeneous-unit retrieval", rt.block_on(heterogeneous_retrieval()), &mut failed);
    report("three-row structured values", table1_reproduction(&catalog), &mut failed);
    report("conversion endpoint contract", rt.block_on(endpoint_contract()), &mut failed);
    report("non-destructive conversion", rt.block_on(non_destructiveness(&catalog)), &mut failed);
    report("saved-view permanence", rt.block_on(saved_view_permanence()), &mut failed);
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
