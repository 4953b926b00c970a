//! HTTP planning service and the request handling it shares with the CLI.

use crate::model::{PlanningTask, Semantics};
use crate::process::{emit, plan_to_process, Format, ProcessGraph};
use crate::search::{solve, validate_plan, Certifier, Limit, SearchConfig, SearchStats, ValidationReport, VerdictKind};
use crate::task_io::{
    compile_bo, from_json, plan_from_doc, plan_to_doc, ActionScope, AtomDoc, BusinessObject, InitOverride, ModelDocument,
    ObjectDoc, OverrideDoc, PlanDoc, TaskIoError,
};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;
use tower_http::cors::CorsLayer;

/// Business objects available to requests by id.
#[derive(Clone, Debug, Default)]
pub struct Repository {
    objects: Vec<BusinessObject>,
}

impl Repository {
    pub fn new(objects: Vec<BusinessObject>) -> Result<Self, TaskIoError> {
        for (i, o) in objects.iter().enumerate() {
            if objects[..i].iter().any(|p| p.id == o.id) {
                return Err(TaskIoError::Schema { path: o.id.clone(), message: "duplicate object id".into() });
            }
        }
        Ok(Repository { objects })
    }

    /// Loads every `*.json` model file in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, TaskIoError> {
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        files.sort();
        let mut objects = Vec::new();
        for f in files {
            let doc: ModelDocument = from_json(&std::fs::read_to_string(&f)?).map_err(|e| match e {
                TaskIoError::Schema { path, message } => {
                    TaskIoError::Schema { path: format!("{}: {path}", f.display()), message }
                }
                e => e,
            })?;
            objects.extend(doc.business_objects()?);
        }
        Repository::new(objects)
    }

    pub fn objects(&self) -> &[BusinessObject] {
        &self.objects
    }

    pub fn get(&self, id: &str) -> Option<&BusinessObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// Server-side limits applied on top of request budgets.
#[derive(Clone, Debug)]
pub struct ServiceLimits {
    pub max_time_ms: u64,
    pub max_evaluations: Option<u64>,
}

impl Default for ServiceLimits {
    fn default() -> Self {
        ServiceLimits { max_time_ms: 60_000, max_evaluations: None }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RequestError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Unprocessable(String),
}

impl RequestError {
    pub fn status(&self) -> StatusCode {
        match self {
            RequestError::BadRequest(_) => StatusCode::BAD_REQUEST,
            RequestError::NotFound(_) => StatusCode::NOT_FOUND,
            RequestError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for RequestError {
    fn into_response(self) -> Response {
        (self.status(), Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

/// Objects, initial-state changes and goal shared by plan and validate requests.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    /// Repository object id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    /// Further repository objects for multi-object problems.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<String>,
    /// Inline model used instead of the repository.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDocument>,
    pub goal: Vec<AtomDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub init_overrides: Vec<OverrideDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<ActionScope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SearchConfig>,
    /// Extra rendering of the process graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateRequest {
    #[serde(default)]
    pub object: Option<String>,
    #[serde(default)]
    pub objects: Vec<String>,
    #[serde(default)]
    pub model: Option<ModelDocument>,
    pub goal: Vec<AtomDoc>,
    #[serde(default)]
    pub init_overrides: Vec<OverrideDoc>,
    #[serde(default)]
    pub scope: Option<ActionScope>,
    pub plan: PlanDoc,
    pub semantics: Semantics,
    #[serde(default)]
    pub certifier: CertifierKind,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertifierKind {
    #[default]
    Rpg,
    Oracle,
    Search,
}

impl CertifierKind {
    pub fn certifier(self) -> Certifier {
        match self {
            CertifierKind::Rpg => Certifier::RpgInfinity,
            CertifierKind::Oracle => Certifier::Oracle { limit: crate::oracle::DEFAULT_ORACLE_LIMIT },
            CertifierKind::Search => Certifier::Search { max_evaluations: 1_000_000 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResponse {
    pub verdict: VerdictKind,
    pub semantics: Semantics,
    pub plan: Option<PlanDoc>,
    pub process: Option<ProcessGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendered: Option<String>,
    pub stats: SearchStats,
    pub limit: Option<Limit>,
    pub reran_unpruned: bool,
    pub goal: Vec<AtomDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub name: String,
    pub qualified: String,
    pub domain: Vec<String>,
    pub initial: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSummary {
    pub id: String,
    pub name: String,
    pub variables: Vec<VariableInfo>,
    pub actions: Vec<String>,
}

impl ObjectSummary {
    pub fn of(o: &BusinessObject) -> Self {
        ObjectSummary {
            id: o.id.clone(),
            name: o.name.clone(),
            variables: o
                .variables
                .iter()
                .map(|v| VariableInfo {
                    name: v.name.clone(),
                    qualified: o.qualified(&v.name),
                    domain: v.declared_values().map(|i| v.domain[i as usize].clone()).collect(),
                    initial: v.domain[v.initial as usize].clone(),
                })
                .collect(),
            actions: o.actions.iter().map(|a| a.name.clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectDetail {
    #[serde(flatten)]
    pub summary: ObjectSummary,
    pub model: ObjectDoc,
}

struct Problem<'a> {
    object: &'a Option<String>,
    objects: &'a [String],
    model: &'a Option<ModelDocument>,
    goal: &'a [AtomDoc],
    init_overrides: &'a [OverrideDoc],
    scope: Option<ActionScope>,
}

fn schema_error(e: TaskIoError) -> RequestError {
    RequestError::BadRequest(e.to_string())
}

impl Problem<'_> {
    fn compile(&self, repo: &Repository) -> Result<PlanningTask, RequestError> {
        let objects: Vec<BusinessObject> = match self.model {
            Some(doc) => doc.business_objects().map_err(schema_error)?,
            None => {
                let ids: Vec<&String> = self.object.iter().chain(self.objects).collect();
                if ids.is_empty() {
                    return Err(RequestError::BadRequest("no object, objects or model given".into()));
                }
                ids.into_iter()
                    .map(|id| repo.get(id).cloned().ok_or_else(|| RequestError::NotFound(format!("unknown object `{id}`"))))
                    .collect::<Result<_, _>>()?
            }
        };
        // Single-object requests may use unqualified variable names.
        let qualify = |var: &str| match &objects[..] {
            [o] if !o.id.is_empty() && o.variable_index(var).is_some() => o.qualified(var),
            _ => var.to_string(),
        };
        let goal: Vec<(String, String)> = self.goal.iter().map(|a| (qualify(&a.var), a.val.clone())).collect();
        let overrides = self
            .init_overrides
            .iter()
            .enumerate()
            .map(|(i, o)| match o {
                OverrideDoc::Value(a) => Ok(InitOverride::Value { var: qualify(&a.var), value: a.val.clone() }),
                OverrideDoc::Unset(u) if u.unset => Ok(InitOverride::Unset { var: qualify(&u.var) }),
                OverrideDoc::Unset(_) => Err(RequestError::BadRequest(format!("init_overrides[{i}].unset: must be true"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        compile_bo(&objects, &goal, &overrides, self.scope.unwrap_or_default())
            .map_err(|e| RequestError::Unprocessable(e.to_string()))
    }
}

/// Solves a compiled task and packages plan, process graph and statistics.
pub fn plan_task(task: &PlanningTask, config: &SearchConfig, format: Option<Format>) -> Result<PlanResponse, RequestError> {
    config.validate().map_err(RequestError::Unprocessable)?;
    let r = solve(task, config);
    let (plan, process) = match r.verdict.plan() {
        Some(tree) => {
            let g = plan_to_process(task, tree).map_err(|e| RequestError::Unprocessable(e.to_string()))?;
            (Some(plan_to_doc(task, tree)), Some(g))
        }
        None => (None, None),
    };
    let rendered = match (format, &process) {
        (Some(f), Some(g)) if f != Format::Json => Some(emit(g, f)),
        _ => None,
    };
    Ok(PlanResponse {
        verdict: r.verdict.kind(),
        semantics: r.semantics,
        plan,
        process,
        rendered,
        stats: r.stats,
        limit: r.limit,
        reran_unpruned: r.reran_unpruned,
        goal: task
            .goal()
            .iter()
            .map(|f| {
                let v = task.variable(f.var);
                AtomDoc { var: v.name.clone(), val: v.domain[f.value as usize].clone() }
            })
            .collect(),
    })
}

pub fn handle_plan(repo: &Repository, req: &PlanRequest, limits: &ServiceLimits) -> Result<PlanResponse, RequestError> {
    let problem = Problem {
        object: &req.object,
        objects: &req.objects,
        model: &req.model,
        goal: &req.goal,
        init_overrides: &req.init_overrides,
        scope: req.scope,
    };
    let task = problem.compile(repo)?;
    let mut config = req.config.clone().unwrap_or_default();
    config.time_budget_ms = Some(config.time_budget_ms.unwrap_or(limits.max_time_ms).min(limits.max_time_ms));
    if let Some(cap) = limits.max_evaluations {
        config.max_evaluations = Some(config.max_evaluations.map_or(cap, |m| m.min(cap)));
    }
    plan_task(&task, &config, req.format)
}

pub fn handle_validate(repo: &Repository, req: &ValidateRequest) -> Result<ValidationReport, RequestError> {
    let problem = Problem {
        object: &req.object,
        objects: &req.objects,
        model: &req.model,
        goal: &req.goal,
        init_overrides: &req.init_overrides,
        scope: req.scope,
    };
    let task = problem.compile(repo)?;
    let tree = plan_from_doc(&task, &req.plan, "plan").map_err(|e| RequestError::Unprocessable(e.to_string()))?;
    Ok(validate_plan(&task, &tree, req.semantics, req.certifier.certifier()))
}

pub struct AppState {
    pub repo: Repository,
    pub limits: ServiceLimits,
}

async fn list_objects(State(s): State<Arc<AppState>>) -> Json<Vec<ObjectSummary>> {
    Json(s.repo.objects().iter().map(ObjectSummary::of).collect())
}

async fn get_object(State(s): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<ObjectDetail>, RequestError> {
    let o = s.repo.get(&id).ok_or_else(|| RequestError::NotFound(format!("unknown object `{id}`")))?;
    Ok(Json(ObjectDetail { summary: ObjectSummary::of(o), model: ObjectDoc::from_object(o) }))
}

async fn post_plan(State(s): State<Arc<AppState>>, body: String) -> Result<Json<PlanResponse>, RequestError> {
    let req: PlanRequest = from_json(&body).map_err(schema_error)?;
    let r = tokio::task::spawn_blocking(move || handle_plan(&s.repo, &req, &s.limits))
        .await
        .map_err(|e| RequestError::Unprocessable(format!("planner crashed: {e}")))??;
    Ok(Json(r))
}

async fn post_validate(State(s): State<Arc<AppState>>, body: String) -> Result<Json<ValidationReport>, RequestError> {
    let req: ValidateRequest = from_json(&body).map_err(schema_error)?;
    let r = tokio::task::spawn_blocking(move || handle_validate(&s.repo, &req))
        .await
        .map_err(|e| RequestError::Unprocessable(format!("validator crashed: {e}")))??;
    Ok(Json(r))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/objects", get(list_objects))
        .route("/objects/{id}", get(get_object))
        .route("/plan", post(post_plan))
        .route("/validate", post(post_validate))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(addr: &str, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await
}
