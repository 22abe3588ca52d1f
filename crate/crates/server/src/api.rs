//! JSON-over-HTTP facade. Handlers parse, delegate to the core library and
//! serialize its results unchanged; all state lives in the [`Store`].

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use harmonia::corpus::{decode_all, list_images};
use harmonia::miner::MiningStats;
use harmonia::preference::{harmony_of_ids, HarmonyMatch};
use harmonia::{
    decode_image, extract_descriptor, mine, predict_preference, rank_catalog, CatalogFilter, CatalogItem, ColorDescriptor,
    ColorDistanceTable, ColorId, ExtractConfig, HarmoniousPalette, Look, MinerConfig, Partition, PreferenceScore, Store,
    UserProfile, Viewer,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

/// Largest corpus accepted by the synchronous mining endpoint.
pub const MAX_MINE_ITEMS: usize = 5000;

const MAX_UPLOAD_BYTES: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    InvalidState,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub detail: Option<serde_json::Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    fn status(&self) -> StatusCode {
        match self.code {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::InvalidState => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<harmonia::Error> for ApiError {
    fn from(e: harmonia::Error) -> Self {
        use harmonia::Error as E;
        let code = match &e {
            E::NotFound(_) => ErrorCode::NotFound,
            E::EmptyKnowledgeBase | E::Locked(_) => ErrorCode::InvalidState,
            E::Corrupt { .. } | E::Io(_) => ErrorCode::Internal,
            _ => ErrorCode::BadRequest,
        };
        if code == ErrorCode::Internal {
            log::error!("{e}");
        }
        let detail = match &e {
            E::UnknownColor(id) | E::DuplicateColor(id) => Some(serde_json::json!({ "color_id": id })),
            E::InvalidColor { color_id, .. } => Some(serde_json::json!({ "color_id": color_id })),
            _ => None,
        };
        Self {
            code,
            message: e.to_string(),
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, format!("worker failed: {e}")))?
}

struct Shared {
    partition: Partition,
    table: ColorDistanceTable,
    store: Store,
    extract: ExtractConfig,
}

/// Immutable partition and distance table plus the shared store.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
    cors_origin: Option<HeaderValue>,
}

impl AppState {
    /// Fails when stored data references colors outside `partition`.
    pub fn new(partition: Partition, store: Store) -> harmonia::Result<Self> {
        store.check_ids(&partition)?;
        let table = ColorDistanceTable::new(&partition);
        Ok(Self {
            shared: Arc::new(Shared {
                partition,
                table,
                store,
                extract: ExtractConfig::default(),
            }),
            cors_origin: None,
        })
    }

    /// Restrict CORS to one origin instead of allowing any.
    pub fn with_cors_origin(mut self, origin: HeaderValue) -> Self {
        self.cors_origin = Some(origin);
        self
    }

    pub fn partition(&self) -> &Partition {
        &self.shared.partition
    }

    pub fn table(&self) -> &ColorDistanceTable {
        &self.shared.table
    }

    pub fn store(&self) -> &Store {
        &self.shared.store
    }
}

pub fn router(state: AppState) -> Router {
    let origin = match &state.cors_origin {
        Some(o) => AllowOrigin::exact(o.clone()),
        None => AllowOrigin::from(Any),
    };
    let cors = CorsLayer::new().allow_origin(origin).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/api/colors", get(colors))
        .route("/api/users/{id}", get(get_user))
        .route("/api/users/{id}/ratings", put(put_ratings))
        .route("/api/descriptor", post(descriptor))
        .route("/api/harmony", post(harmony))
        .route("/api/preference", post(preference))
        .route("/api/rank", post(rank))
        .route("/api/palettes", get(palettes))
        .route("/api/mine", post(mine_corpus))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .layer(cors)
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorSwatch {
    pub id: ColorId,
    pub name: String,
    pub achromatic: bool,
    pub rgb: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorsResponse {
    pub version: String,
    pub colors: Vec<ColorSwatch>,
}

pub fn color_summary(partition: &Partition) -> ColorsResponse {
    ColorsResponse {
        version: partition.version().to_owned(),
        colors: partition
            .colors()
            .iter()
            .map(|c| ColorSwatch {
                id: c.id,
                name: c.name.clone(),
                achromatic: c.achromatic,
                rgb: c.representative_rgb(),
            })
            .collect(),
    }
}

async fn colors(State(s): State<AppState>) -> Json<ColorsResponse> {
    Json(color_summary(s.partition()))
}

async fn get_user(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<UserProfile> {
    Ok(Json(s.store().get_profile(&id)?))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RatingsRequest {
    #[serde(default)]
    pub default_rating: Option<f64>,
    pub ratings: BTreeMap<ColorId, f64>,
}

/// Replace the user's ratings wholesale.
async fn put_ratings(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<UserProfile> {
    let req: RatingsRequest = parse(&body)?;
    let mut profile = UserProfile::new(id)?;
    if let Some(d) = req.default_rating {
        profile.set_default_rating(d)?;
    }
    for (color, value) in req.ratings {
        profile.rate(color, value)?;
    }
    profile.validate_ids(s.partition())?;
    s.store().put_profile(&profile)?;
    Ok(Json(profile))
}

/// Body is the encoded image itself (PNG or JPEG).
async fn descriptor(State(s): State<AppState>, body: Bytes) -> ApiResult<ColorDescriptor> {
    if body.is_empty() {
        return Err(ApiError::bad_request("empty image payload"));
    }
    let d = blocking(move || {
        let image = decode_image(&body)?;
        Ok(extract_descriptor(&image, s.partition(), &s.shared.extract)?)
    })
    .await?;
    Ok(Json(d))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonyRequest {
    pub color_ids: Vec<ColorId>,
}

async fn harmony(State(s): State<AppState>, body: Bytes) -> ApiResult<HarmonyMatch> {
    let req: HarmonyRequest = parse(&body)?;
    let kb = s.store().knowledge_base();
    Ok(Json(harmony_of_ids(&req.color_ids, &kb, s.table())?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreferenceRequest {
    pub look: Look,
    #[serde(default)]
    pub user_id: Option<String>,
    #[serde(default)]
    pub guest: bool,
}

fn load_viewer(s: &AppState, user_id: Option<&str>, guest: bool) -> Result<Option<UserProfile>, ApiError> {
    match (user_id, guest) {
        (Some(_), true) => Err(ApiError::bad_request("give either user_id or guest, not both")),
        (Some(id), false) => Ok(Some(s.store().get_profile(id)?)),
        (None, _) => Ok(None),
    }
}

fn viewer(profile: &Option<UserProfile>) -> Viewer<'_> {
    profile.as_ref().map_or(Viewer::Guest, Viewer::Registered)
}

async fn preference(State(s): State<AppState>, body: Bytes) -> ApiResult<PreferenceScore> {
    let req: PreferenceRequest = parse(&body)?;
    let profile = load_viewer(&s, req.user_id.as_deref(), req.guest)?;
    let kb = s.store().knowledge_base();
    Ok(Json(predict_preference(&req.look, viewer(&profile), &kb, s.table())?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRequest {
    pub anchor: Look,
    #[serde(default)]
    pub filter: CatalogFilter,
    #[serde(default)]
    pub user_id: Option<String>,
    #[serde(default)]
    pub guest: bool,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub item: CatalogItem,
    pub score: PreferenceScore,
}

/// Catalog items matching `filter`, best addition to `anchor` first.
pub fn rank_items(
    anchor: &Look,
    items: Vec<CatalogItem>,
    viewer: Viewer<'_>,
    kb: &harmonia::KnowledgeBase,
    table: &ColorDistanceTable,
) -> harmonia::Result<Vec<RankedItem>> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let candidates: Vec<_> = items.iter().map(CatalogItem::apparel).collect();
    let ranked = rank_catalog(anchor, &candidates, viewer, kb, table)?;
    Ok(ranked
        .into_iter()
        .map(|r| RankedItem {
            item: items[r.index].clone(),
            score: r.score,
        })
        .collect())
}

async fn rank(State(s): State<AppState>, body: Bytes) -> ApiResult<Vec<RankedItem>> {
    let req: RankRequest = parse(&body)?;
    let profile = load_viewer(&s, req.user_id.as_deref(), req.guest)?;
    let kb = s.store().knowledge_base();
    let items = s.store().list_catalog(&req.filter);
    let mut ranked = rank_items(&req.anchor, items, viewer(&profile), &kb, s.table())?;
    if let Some(n) = req.limit {
        ranked.truncate(n);
    }
    Ok(Json(ranked))
}

#[derive(Debug, Clone, Default, Deserialize)]
struct PaletteQuery {
    label: Option<String>,
}

async fn palettes(State(s): State<AppState>, Query(q): Query<PaletteQuery>) -> Json<Vec<HarmoniousPalette>> {
    Json(s.store().list_palettes(q.label.as_deref()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MineRequest {
    pub corpus_path: PathBuf,
    #[serde(default)]
    pub config: MinerConfig,
    /// Replace the stored knowledge base with the result.
    #[serde(default = "yes")]
    pub publish: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineResponse {
    pub stats: MiningStats,
    pub palettes: Vec<HarmoniousPalette>,
    /// False when publishing was not requested or nothing was promoted.
    pub published: bool,
}

async fn mine_corpus(State(s): State<AppState>, body: Bytes) -> ApiResult<MineResponse> {
    let req: MineRequest = parse(&body)?;
    req.config.validate()?;
    let resp = blocking(move || {
        let paths = list_images(&req.corpus_path).map_err(|e| match e {
            harmonia::Error::Io(io) => ApiError::bad_request(format!("corpus {}: {io}", req.corpus_path.display())),
            other => other.into(),
        })?;
        if paths.len() > MAX_MINE_ITEMS {
            return Err(ApiError {
                detail: Some(serde_json::json!({ "items": paths.len(), "limit": MAX_MINE_ITEMS })),
                ..ApiError::bad_request(format!("corpus has {} images; the limit is {MAX_MINE_ITEMS}", paths.len()))
            });
        }
        let outcome = mine(decode_all(paths), s.partition(), s.table(), &req.config, &s.shared.extract)?;
        let published = req.publish && !outcome.palettes.is_empty();
        if published {
            s.store().put_palettes(outcome.knowledge_base())?;
        }
        Ok(MineResponse {
            stats: outcome.stats,
            palettes: outcome.palettes,
            published,
        })
    })
    .await?;
    Ok(Json(resp))
}

/// Bind and serve until Ctrl-C.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
