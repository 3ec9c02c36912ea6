//! OpenAI-style HTTP transports.
//!
//! Chat: `POST {model, messages:[{role, content}], temperature, max_tokens}`,
//! reading `choices[0].message.content`.
//! Embeddings: `POST {model, input:[...]}`, reading `data[i].embedding`
//! (reordered by `data[i].index` when present).

use reqwest::blocking::Client;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{BackendConfig, ChatBackend, ChatRequest, EmbeddingBackend, GatewayError};

fn build_client(config: &BackendConfig) -> Result<Client, GatewayError> {
    Client::builder()
        .timeout(config.timeout())
        .build()
        .map_err(|e| GatewayError::Config(e.to_string()))
}

fn post_json(client: &Client, url: &str, api_key: Option<&str>, body: &Value) -> Result<Value, GatewayError> {
    let mut request = client.post(url).json(body);
    if let Some(key) = api_key {
        request = request.bearer_auth(key);
    }
    let response = request.send().map_err(|e| GatewayError::Transport(e.to_string()))?;
    let status = response.status();
    let text = response.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
    if !status.is_success() {
        return Err(GatewayError::Backend {
            status: status.as_u16(),
            body: text,
        });
    }
    serde_json::from_str(&text).map_err(|e| GatewayError::MalformedResponse(e.to_string()))
}

pub struct HttpChatBackend {
    client: Client,
    url: String,
    api_key: Option<String>,
}

impl HttpChatBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        Ok(Self {
            client: build_client(config)?,
            url: config.chat_endpoint_url.clone(),
            api_key: config.resolve_api_key(),
        })
    }
}

pub(crate) fn chat_body(request: &ChatRequest) -> Value {
    let mut messages = Vec::with_capacity(2);
    if !request.system_prompt.is_empty() {
        messages.push(json!({"role": "system", "content": request.system_prompt}));
    }
    messages.push(json!({"role": "user", "content": request.user_message}));
    json!({
        "model": request.model_id,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    })
}

impl ChatBackend for HttpChatBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let body = post_json(&self.client, &self.url, self.api_key.as_deref(), &chat_body(request))?;
        match body.pointer("/choices/0/message/content") {
            Some(Value::String(content)) => Ok(content.clone()),
            Some(Value::Null) | None => Err(GatewayError::MalformedResponse(
                "missing choices[0].message.content".into(),
            )),
            Some(other) => Err(GatewayError::MalformedResponse(format!("content is not a string: {other}"))),
        }
    }
}

pub struct HttpEmbeddingBackend {
    client: Client,
    url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpEmbeddingBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        Ok(Self {
            client: build_client(config)?,
            url: config.embedding_endpoint_url.clone(),
            model: config.embedding_model.clone(),
            api_key: config.resolve_api_key(),
        })
    }
}

#[derive(Deserialize)]
struct EmbeddingItem {
    embedding: Vec<f64>,
    #[serde(default)]
    index: Option<usize>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

impl EmbeddingBackend for HttpEmbeddingBackend {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        let body = json!({"model": self.model, "input": texts});
        let value = post_json(&self.client, &self.url, self.api_key.as_deref(), &body)?;
        let mut parsed: EmbeddingResponse =
            serde_json::from_value(value).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        if parsed.data.iter().all(|item| item.index.is_some()) {
            parsed.data.sort_by_key(|item| item.index);
        }
        Ok(parsed.data.into_iter().map(|item| item.embedding).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AgentRole;

    #[test]
    fn chat_body_shape() {
        let request = ChatRequest {
            role: AgentRole::Atomizer,
            model_id: "m1".into(),
            system_prompt: "sys".into(),
            user_message: "user".into(),
            temperature: 0.0,
            max_tokens: 10,
        };
        let body = chat_body(&request);
        assert_eq!(
            body,
            json!({
                "model": "m1",
                "messages": [{"role": "system", "content": "sys"}, {"role": "user", "content": "user"}],
                "temperature": 0.0,
                "max_tokens": 10
            })
        );
        let bare = chat_body(&ChatRequest {
            system_prompt: String::new(),
            ..request
        });
        assert_eq!(bare["messages"].as_array().unwrap().len(), 1);
    }
}
