use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::Json;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use unitfacet_core::comparison::ComparisonTable;
use unitfacet_core::facet::{autocomplete_units, FacetDescriptor, FilterSpec};
use unitfacet_core::number::{self, parse_decimal};
use unitfacet_core::store::ComparisonSpec;
use unitfacet_core::Error;

use crate::error::ApiError;
use crate::state::AppState;

type ApiResult<T> = std::result::Result<T, ApiError>;
type AppRef = State<Arc<AppState>>;

fn rejected(e: impl std::fmt::Display) -> ApiError {
    ApiError::invalid_request(e.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConvertResponse {
    #[serde(with = "number::as_string")]
    pub value: f64,
    pub source: String,
    pub target: String,
}

pub async fn convert(
    State(state): AppRef,
    path: std::result::Result<Path<(String, String, String)>, PathRejection>,
) -> ApiResult<Json<ConvertResponse>> {
    let Path((value, source, target)) = path.map_err(rejected)?;
    let v = parse_decimal(&value).ok_or_else(|| Error::Syntax {
        code: value.clone(),
        position: 0,
        message: "value is not a finite decimal number".into(),
    })?;
    let result = state.catalog.registry.convert_codes(v, &source, &target)?;
    Ok(Json(ConvertResponse {
        value: result.value,
        source,
        target,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default)]
    pub filters: Vec<FilterSpec>,
    #[serde(default)]
    pub offset: usize,
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResponse {
    pub contributions: Vec<String>,
    pub total: usize,
}

pub async fn search(
    State(state): AppRef,
    body: std::result::Result<Json<SearchRequest>, JsonRejection>,
) -> ApiResult<Json<SearchResponse>> {
    let Json(req) = body.map_err(rejected)?;
    let snapshot = state.snapshot();
    let ids = snapshot.index.apply_filters(&state.catalog, &req.filters)?;
    let total = ids.len();
    let page = ids
        .into_iter()
        .skip(req.offset)
        .take(req.limit.unwrap_or(usize::MAX))
        .collect();
    Ok(Json(SearchResponse {
        contributions: page,
        total,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FacetQuery {
    pub property: String,
    pub unit: Option<String>,
    pub quantity_kind: Option<String>,
}

pub async fn facets(
    State(state): AppRef,
    query: std::result::Result<Query<FacetQuery>, QueryRejection>,
) -> ApiResult<Json<FacetDescriptor>> {
    let Query(q) = query.map_err(rejected)?;
    let snapshot = state.snapshot();
    let descriptor = snapshot.index.generate_facets(
        &state.catalog,
        &q.property,
        q.quantity_kind.as_deref(),
        q.unit.as_deref(),
    )?;
    Ok(Json(descriptor))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AutocompleteQuery {
    #[serde(default)]
    pub q: String,
    pub quantity_kind: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Suggestion {
    pub id: String,
    pub code: String,
    pub label: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AutocompleteResponse {
    pub suggestions: Vec<Suggestion>,
}

pub async fn autocomplete(
    State(state): AppRef,
    query: std::result::Result<Query<AutocompleteQuery>, QueryRejection>,
) -> ApiResult<Json<AutocompleteResponse>> {
    let Query(q) = query.map_err(rejected)?;
    let suggestions = autocomplete_units(&state.catalog, &q.q, &q.quantity_kind)?
        .into_iter()
        .map(|u| Suggestion {
            id: u.id,
            code: u.ucum_code,
            label: u.label,
        })
        .collect();
    Ok(Json(AutocompleteResponse { suggestions }))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SaveRequest {
    pub contributions: Vec<String>,
    pub properties: Vec<String>,
    #[serde(default)]
    pub unit_overrides: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SaveResponse {
    pub id: String,
    pub url: String,
}

pub async fn save_comparison(
    State(state): AppRef,
    body: std::result::Result<Json<SaveRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body.map_err(rejected)?;
    let spec = ComparisonSpec {
        contributions: req.contributions,
        properties: req.properties,
        unit_overrides: req.unit_overrides,
    };
    let state = state.clone();
    let id = tokio::task::spawn_blocking(move || state.save_comparison(spec))
        .await
        .map_err(|e| Error::Io(std::io::Error::other(e)))??;
    let url = crate::comparison_path(&id);
    Ok((
        StatusCode::CREATED,
        [(header::LOCATION, url.clone())],
        Json(SaveResponse { id, url }),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RenderedComparison {
    pub id: String,
    pub created: String,
    #[serde(flatten)]
    pub table: ComparisonTable,
}

pub async fn get_comparison(
    State(state): AppRef,
    path: std::result::Result<Path<String>, PathRejection>,
) -> ApiResult<Json<RenderedComparison>> {
    let Path(id) = path.map_err(rejected)?;
    let snapshot = state.snapshot();
    let saved = snapshot.store.load_comparison(&id)?;
    let table = ComparisonTable::render_saved(&snapshot.store, &state.catalog, saved)?;
    Ok(Json(RenderedComparison {
        id: saved.id.clone(),
        created: saved.created.clone(),
        table,
    }))
}

pub async fn fallback() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: unitfacet_core::ErrorCode::NotFound,
        message: "no such route".into(),
        details: None,
    }
}
