//! Optional chat-completion client for the language-model stages: idea,
//! data, title and question answering. Replies follow a line-delimited
//! `key: value` contract. The offline transport answers from the built-in
//! samplers and never touches the network.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{sample_tree_spec, TreeNode, TreeSpec};
use crate::instruct::vote_select;
use crate::keywords::KeywordLibrary;
use crate::synth::{self, pick};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Idea,
    Data,
    Title,
    Qa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub stage: Stage,
    pub body: &'static str,
    /// Keys that must appear at least once in the reply.
    pub required: &'static [&'static str],
}

const IDEA: PromptTemplate = PromptTemplate {
    stage: Stage::Idea,
    body: "You design abstract images for visual reasoning exercises. Suggest one fresh idea for a {figure} \
that a reader could answer questions about.\nReply with exactly these lines and nothing else:\nidea: <one sentence>\ntopic: <two to five words>",
    required: &["idea", "topic"],
};

const DATA: PromptTemplate = PromptTemplate {
    stage: Stage::Data,
    body: "Invent the internal structure of an organization named {topic}. Keep it small: at most 8 units \
including {topic} itself, at most 3 levels, and no unit with more than 3 direct sub-units. Unit names must be unique.\n\
Reply with one line `root: <name>` and then one line `edge: <parent> -> <child>` for every reporting line.",
    required: &["root"],
};

const TITLE: PromptTemplate = PromptTemplate {
    stage: Stage::Title,
    body: "Here is the data behind a figure:\n{data}\nWrite a concise title for the figure.\nReply with exactly one line:\ntitle: <title>",
    required: &["title"],
};

const QA: PromptTemplate = PromptTemplate {
    stage: Stage::Qa,
    body: "{description}\nQuestion: {question}\nWork through the question, then end with one line of the form\nanswer: <final answer>",
    required: &["answer"],
};

pub fn template(stage: Stage) -> &'static PromptTemplate {
    match stage {
        Stage::Idea => &IDEA,
        Stage::Data => &DATA,
        Stage::Title => &TITLE,
        Stage::Qa => &QA,
    }
}

impl PromptTemplate {
    pub fn placeholders(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut rest = self.body;
        while let Some(i) = rest.find('{') {
            let Some(j) = rest[i..].find('}') else { break };
            let name = &rest[i + 1..i + j];
            if !out.contains(&name) {
                out.push(name);
            }
            rest = &rest[i + j + 1..];
        }
        out
    }

    pub fn render(&self, context: &BTreeMap<String, String>) -> Result<String, LlmError> {
        let mut out = self.body.to_string();
        for name in self.placeholders() {
            let value = context.get(name).ok_or_else(|| LlmError::Unbound(name.to_string()))?;
            out = out.replace(&format!("{{{name}}}"), value);
        }
        Ok(out)
    }
}

/// Parsed `key: value` reply, in reply order. Keys repeat for list fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub fields: Vec<(String, String)>,
}

impl Reply {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.fields.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Reads a tree reply into a spec and checks the size limits.
    pub fn to_tree_spec(&self) -> Result<TreeSpec, String> {
        let root = self.get("root").ok_or("missing root")?.to_string();
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for edge in self.all("edge") {
            let (p, c) = edge.split_once("->").ok_or_else(|| format!("edge `{edge}` lacks `->`"))?;
            children.entry(p.trim().to_string()).or_default().push(c.trim().to_string());
        }
        fn build(label: &str, children: &BTreeMap<String, Vec<String>>, depth: usize) -> Result<TreeNode, String> {
            if depth > 3 {
                return Err("tree deeper than 3 levels".into());
            }
            let kids = children.get(label).map(|v| v.iter().map(|c| build(c, children, depth + 1)).collect()).transpose()?;
            Ok(TreeNode { label: label.to_string(), children: kids.unwrap_or_default() })
        }
        let tree = build(&root, &children, 1)?;
        let mut spec = TreeSpec { root_label: root, children: tree.children, node_colors: BTreeMap::new(), extra_edges: vec![] };
        let labels: Vec<String> = spec.labels().into_iter().map(String::from).collect();
        let reachable = labels.len();
        let declared = 1 + children.values().map(Vec::len).sum::<usize>();
        if reachable != declared {
            return Err("edges do not form a single tree under the root".into());
        }
        spec.node_colors = labels.into_iter().zip(crate::diagram::NODE_FILLS.iter().copied().cycle()).collect();
        spec.check().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

pub fn parse_reply(text: &str, template: &PromptTemplate) -> Result<Reply, String> {
    let mut reply = Reply::default();
    for line in text.lines() {
        let line = line.trim().trim_start_matches(['-', '*', ' ']);
        if let Some((k, v)) = line.split_once(':') {
            let key = k.trim().to_lowercase();
            if !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && !v.trim().is_empty() {
                reply.fields.push((key, v.trim().to_string()));
            }
        }
    }
    let missing: Vec<&str> = template.required.iter().copied().filter(|k| reply.get(k).is_none()).collect();
    if missing.is_empty() {
        Ok(reply)
    } else {
        Err(format!("reply is missing the line(s): {}", missing.join(", ")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_parallel: usize,
    pub retry_budget: u32,
    /// First backoff delay; doubles after each failed call.
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    pub request_log: Option<PathBuf>,
    /// Answer from the built-in samplers instead of calling `endpoint`.
    pub offline: bool,
    pub seed: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4-turbo".into(),
            temperature: 0.7,
            max_parallel: 4,
            retry_budget: 3,
            backoff_ms: 500,
            timeout_secs: 60,
            credential_env: "ABSYNTH_API_KEY".into(),
            request_log: None,
            offline: true,
            seed: 0,
        }
    }
}

impl BackendConfig {
    pub fn check(&self) -> Result<(), LlmError> {
        if self.max_parallel < 1 {
            return Err(LlmError::Config("max_parallel must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::Config("temperature must lie in [0, 2]".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<BackendConfig, LlmError> {
        let cfg: BackendConfig = toml::from_str(text).map_err(|e| LlmError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LlmError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("reply violates the output contract ({message}); raw reply: {raw}")]
    ContractViolation { raw: String, message: String },
    #[error("placeholder `{0}` is not bound")]
    Unbound(String),
    #[error("self-consistency needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("backend config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub stage: Stage,
    pub prompt: String,
    pub context: BTreeMap<String, String>,
    /// Index among repeated samples of the same prompt.
    pub sample: usize,
}

pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, String>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    config: BackendConfig,
}

impl HttpTransport {
    pub fn new(config: BackendConfig) -> Result<HttpTransport, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::BackendUnavailable(e.to_string()))?;
        Ok(HttpTransport { client, config })
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<WireMessage<'a>>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    content: String,
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, String> {
        let body = WireRequest {
            model: &self.config.model,
            temperature: self.config.temperature,
            messages: vec![WireMessage { role: "user", content: &request.prompt }],
        };
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Ok(key) = std::env::var(&self.config.credential_env) {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("HTTP {}", resp.status()));
        }
        let parsed: WireResponse = resp.json().map_err(|e| e.to_string())?;
        parsed.choices.into_iter().next().map(|c| c.message.content).ok_or_else(|| "reply has no choices".to_string())
    }
}

/// Deterministic stand-in built on the procedural samplers.
pub struct OfflineTransport {
    pub seed: u64,
    library: KeywordLibrary,
}

impl OfflineTransport {
    pub fn new(seed: u64) -> OfflineTransport {
        OfflineTransport { seed, library: KeywordLibrary::builtin() }
    }
}

impl Transport for OfflineTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, String> {
        let ctx = |k: &str| request.context.get(k).map(String::as_str);
        Ok(match request.stage {
            Stage::Idea => {
                let mut rng = synth::rng(synth::mix(self.seed, request.sample as u64), "offline-idea");
                let topic = &pick(&mut rng, &self.library.topics).name;
                format!(
                    "idea: A {} comparing {} across several groups.\ntopic: {topic}",
                    ctx("figure").unwrap_or("bar chart"),
                    topic.to_lowercase()
                )
            }
            Stage::Data => {
                let topic = ctx("topic").ok_or("data stage needs a topic")?;
                let tree = sample_tree_spec(synth::mix(self.seed, synth::fnv(topic)), topic);
                let mut out = format!("root: {}\n", tree.root_label);
                for (p, c) in tree.tree_edges() {
                    out.push_str(&format!("edge: {p} -> {c}\n"));
                }
                out
            }
            Stage::Title => format!("title: {}", ctx("topic").or_else(|| ctx("data").and_then(|d| d.lines().next())).unwrap_or("Untitled")),
            Stage::Qa => format!("answer: {}", ctx("reference").ok_or("offline answers need a reference answer")?),
        })
    }
}

/// Appends every exchange to a JSON-lines log before passing it on.
pub struct LoggingTransport<T> {
    inner: T,
    log: Mutex<File>,
}

impl<T: Transport> LoggingTransport<T> {
    pub fn new(inner: T, path: &Path) -> std::io::Result<LoggingTransport<T>> {
        let log = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(LoggingTransport { inner, log: Mutex::new(log) })
    }
}

impl<T: Transport> Transport for LoggingTransport<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, String> {
        let result = self.inner.complete(request);
        let entry = serde_json::json!({
            "stage": request.stage,
            "sample": request.sample,
            "prompt": request.prompt,
            "reply": result.as_ref().ok(),
            "error": result.as_ref().err(),
        });
        if let Ok(mut f) = self.log.lock() {
            let _ = writeln!(f, "{entry}");
        }
        result
    }
}

pub struct Bridge {
    transport: Box<dyn Transport>,
    config: BackendConfig,
}

impl Bridge {
    pub fn new(transport: Box<dyn Transport>, config: BackendConfig) -> Bridge {
        Bridge { transport, config }
    }

    /// Offline or HTTP transport per `config`, wrapped in a request log when one is configured.
    pub fn from_config(config: BackendConfig) -> Result<Bridge, LlmError> {
        config.check()?;
        let transport: Box<dyn Transport> = match (config.offline, &config.request_log) {
            (true, None) => Box::new(OfflineTransport::new(config.seed)),
            (true, Some(p)) => {
                Box::new(LoggingTransport::new(OfflineTransport::new(config.seed), p).map_err(|e| LlmError::Config(e.to_string()))?)
            }
            (false, None) => Box::new(HttpTransport::new(config.clone())?),
            (false, Some(p)) => {
                Box::new(LoggingTransport::new(HttpTransport::new(config.clone())?, p).map_err(|e| LlmError::Config(e.to_string()))?)
            }
        };
        Ok(Bridge { transport, config })
    }

    fn call(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut delay = self.config.backoff_ms;
        let mut last = String::new();
        for attempt in 0..=self.config.retry_budget {
            if attempt > 0 && delay > 0 {
                std::thread::sleep(Duration::from_millis(delay));
                delay = delay.saturating_mul(2);
            }
            match self.transport.complete(request) {
                Ok(text) => return Ok(text),
                Err(e) => last = e,
            }
        }
        Err(LlmError::BackendUnavailable(last))
    }

    fn propose_sample(&self, stage: Stage, context: &BTreeMap<String, String>, sample: usize) -> Result<Reply, LlmError> {
        let tpl = template(stage);
        let prompt = tpl.render(context)?;
        let mut request = ChatRequest { stage, prompt, context: context.clone(), sample };
        let raw = self.call(&request)?;
        let message = match parse_reply(&raw, tpl) {
            Ok(reply) => return Ok(reply),
            Err(m) => m,
        };
        request.prompt =
            format!("{}\n\nYour previous reply could not be used: {message}. Follow the reply format exactly.", request.prompt);
        let raw = self.call(&request)?;
        parse_reply(&raw, tpl).map_err(|message| LlmError::ContractViolation { raw, message })
    }

    /// Renders the stage template, calls the backend with retries and backoff,
    /// and parses the reply, reprompting once with the parse error.
    pub fn propose(&self, stage: Stage, context: &BTreeMap<String, String>) -> Result<Reply, LlmError> {
        self.propose_sample(stage, context, 0)
    }

    /// `n` independent answers, at most `max_parallel` in flight, voted in
    /// request order.
    pub fn self_consistent_answer(
        &self,
        question: &str,
        context: &BTreeMap<String, String>,
        n: usize,
    ) -> Result<(String, usize), LlmError> {
        if n < 3 {
            return Err(LlmError::TooFewSamples(n));
        }
        let mut ctx = context.clone();
        ctx.insert("question".into(), question.to_string());
        ctx.entry("description".into()).or_default();
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<String, LlmError>>>> = Mutex::new((0..n).map(|_| None).collect());
        std::thread::scope(|s| {
            for _ in 0..self.config.max_parallel.min(n) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let r = self.propose_sample(Stage::Qa, &ctx, i).map(|reply| reply.get("answer").unwrap_or_default().to_string());
                    results.lock().expect("results lock")[i] = Some(r);
                });
            }
        });
        let answers: Vec<String> =
            results.into_inner().expect("results lock").into_iter().map(|r| r.expect("every sample ran")).collect::<Result<_, _>>()?;
        vote_select(&answers).map_err(|_| LlmError::TooFewSamples(n))
    }
}
