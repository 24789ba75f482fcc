use axum::http::header::AUTHORIZATION;
use axum::http::HeaderMap;

use crate::error::ApiError;

/// The bearer credential of a request, if any.
pub fn bearer(headers: &HeaderMap) -> Option<&str> {
    let value = headers.get(AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    let token = token.trim();
    (scheme.eq_ignore_ascii_case("bearer") && !token.is_empty()).then_some(token)
}

/// Comparison whose running time does not depend on where the inputs differ.
pub fn ct_eq(a: &str, b: &str) -> bool {
    a.len() == b.len()
        && a.bytes()
            .zip(b.bytes())
            .fold(0u8, |acc, (x, y)| acc | (x ^ y))
            == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Reader,
    Admin,
}

#[derive(Debug, Clone, Default)]
pub struct Keys {
    pub reader: Option<String>,
    pub admin: Option<String>,
}

impl Keys {
    fn role_of(&self, credential: &str) -> Option<Role> {
        if self.admin.as_deref().is_some_and(|k| ct_eq(k, credential)) {
            return Some(Role::Admin);
        }
        if self.reader.as_deref().is_some_and(|k| ct_eq(k, credential)) {
            return Some(Role::Reader);
        }
        None
    }

    /// Admin keys satisfy reader requirements too.
    pub fn require(&self, headers: &HeaderMap, role: Role) -> Result<Role, ApiError> {
        let credential = bearer(headers)
            .ok_or_else(|| ApiError::unauthenticated("missing bearer credential"))?;
        match self.role_of(credential) {
            Some(have) if have == Role::Admin || role == Role::Reader => Ok(have),
            Some(_) => Err(ApiError::forbidden("admin credential required")),
            None => Err(ApiError::unauthenticated("unknown credential")),
        }
    }

    pub fn is_reader(&self, credential: &str) -> bool {
        self.role_of(credential).is_some()
    }
}
