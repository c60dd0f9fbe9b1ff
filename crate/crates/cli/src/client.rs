use anyhow::{anyhow, Context, Result};
use reqwest::blocking::{Client as Http, RequestBuilder};
use serde_json::Value;

pub struct Client {
    base: String,
    http: Http,
    admin_token: Option<String>,
}

impl Client {
    pub fn new(base: &str, admin_token: Option<String>) -> Self {
        Client {
            base: base.trim_end_matches('/').to_string(),
            http: Http::new(),
            admin_token,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send(&self, req: RequestBuilder) -> Result<(u16, String)> {
        let resp = req
            .send()
            .with_context(|| format!("cannot reach {}", self.base))?;
        let status = resp.status().as_u16();
        Ok((status, resp.text()?))
    }

    /// JSON body of a successful response; 422 rejections are returned as
    /// data, other failures as errors.
    fn json(&self, req: RequestBuilder) -> Result<Value> {
        let (status, body) = self.send(req)?;
        let value: Value = serde_json::from_str(&body).unwrap_or(Value::String(body));
        match status {
            200..=299 | 422 => Ok(value),
            _ => Err(anyhow!(
                "server returned {status}: {}",
                value
                    .get("error")
                    .and_then(Value::as_str)
                    .unwrap_or(&value.to_string())
            )),
        }
    }

    pub fn get(&self, path: &str) -> Result<Value> {
        self.json(self.http.get(self.url(path)))
    }

    pub fn post(&self, path: &str, body: &Value) -> Result<Value> {
        self.json(self.http.post(self.url(path)).json(body))
    }

    pub fn post_admin(&self, path: &str, body: &Value) -> Result<Value> {
        let mut req = self.http.post(self.url(path)).json(body);
        if let Some(t) = &self.admin_token {
            req = req.header("x-admin-token", t);
        }
        self.json(req)
    }

    pub fn get_text(&self, path: &str) -> Result<String> {
        let (status, body) = self.send(self.http.get(self.url(path)))?;
        if !(200..300).contains(&status) {
            return Err(anyhow!("server returned {status}: {body}"));
        }
        Ok(body)
    }
}
