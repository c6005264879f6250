//! HTTP interface over the unit catalog, facet index, and comparison store.
//!
//! Route table (see `docs/api.md` for bodies and error codes):
//!
//! | method | path |
//! |---|---|
//! | GET | `/api/convert/{source_quantity}/from/{source_unit}/to/{target_unit}` |
//! | POST | `/api/search` |
//! | GET | `/api/facets?property=&unit=&quantityKind=` |
//! | GET | `/api/units/autocomplete?q=&quantityKind=` |
//! | POST | `/api/comparisons` |
//! | GET | `/api/comparisons/{id}` |

use std::sync::Arc;

use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS};
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

pub mod error;
pub mod routes;
pub mod state;

pub use error::ApiError;
pub use state::AppState;

pub const CONVERT_ROUTE: &str = "/api/convert/{source_quantity}/from/{source_unit}/to/{target_unit}";
pub const SEARCH_ROUTE: &str = "/api/search";
pub const FACETS_ROUTE: &str = "/api/facets";
pub const AUTOCOMPLETE_ROUTE: &str = "/api/units/autocomplete";
pub const COMPARISONS_ROUTE: &str = "/api/comparisons";
pub const COMPARISON_ROUTE: &str = "/api/comparisons/{id}";

/// Characters escaped inside one path segment. Everything RFC 3986 reserves
/// as a delimiter is included, so `m/s` travels as `m%2Fs`.
const SEGMENT: &AsciiSet = &CONTROLS
    .add(b' ')
    .add(b'"')
    .add(b'#')
    .add(b'%')
    .add(b'/')
    .add(b'<')
    .add(b'>')
    .add(b'?')
    .add(b'[')
    .add(b']')
    .add(b'\\')
    .add(b'^')
    .add(b'`')
    .add(b'{')
    .add(b'|')
    .add(b'}');

pub fn encode_segment(s: &str) -> String {
    utf8_percent_encode(s, SEGMENT).to_string()
}

/// Request path for a conversion, e.g. `/api/convert/25/from/m%2Fs/to/km%2Fh`.
pub fn convert_path(value: &str, source: &str, target: &str) -> String {
    CONVERT_ROUTE
        .replace("{source_quantity}", &encode_segment(value))
        .replace("{source_unit}", &encode_segment(source))
        .replace("{target_unit}", &encode_segment(target))
}

/// Permanent URL path of a saved comparison.
pub fn comparison_path(id: &str) -> String {
    COMPARISON_ROUTE.replace("{id}", &encode_segment(id))
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router, header::InvalidHeaderValue> {
    let mut app = Router::new()
        .route(CONVERT_ROUTE, get(routes::convert))
        .route(SEARCH_ROUTE, post(routes::search))
        .route(FACETS_ROUTE, get(routes::facets))
        .route(AUTOCOMPLETE_ROUTE, get(routes::autocomplete))
        .route(COMPARISONS_ROUTE, post(routes::save_comparison))
        .route(COMPARISON_ROUTE, get(routes::get_comparison))
        .fallback(routes::fallback)
        .with_state(state);
    if let Some(origin) = cors_origin {
        app = app.layer(
            CorsLayer::new()
                .allow_origin(HeaderValue::from_str(origin)?)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

/// Serves until ctrl-c.
pub async fn serve(listener: TcpListener, app: Router) -> std::io::Result<()> {
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
