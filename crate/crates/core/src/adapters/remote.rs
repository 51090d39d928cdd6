use super::scripted::NO_RETRIEVAL_CONTEXT;
use super::{
    AdapterError, AgentRequest, AgentResponse, ChatClient, ChatMessage, Policy, PolicyRequest, PolicyResponse,
    RoleBackend, TokenUsage,
};
use crate::roles::RoleName;

/// Topology policy served by a chat-completion endpoint.
#[derive(Debug, Clone)]
pub struct RemotePolicy {
    client: ChatClient,
    system_prompt: String,
}

impl RemotePolicy {
    pub fn new(client: ChatClient, system_prompt: impl Into<String>) -> Self {
        Self {
            client,
            system_prompt: system_prompt.into(),
        }
    }
}

impl Policy for RemotePolicy {
    fn generate(&self, request: &PolicyRequest<'_>) -> Result<PolicyResponse, AdapterError> {
        let mut user = format!("Problem ({}):\n{}", request.problem.id, request.problem.description);
        if !request.history_prompt.is_empty() {
            user.push_str("\n\n");
            user.push_str(&request.history_prompt);
        }
        let messages = [ChatMessage::system(&self.system_prompt), ChatMessage::user(user)];
        let (content, usage) = self.client.complete(&messages)?;
        Ok(PolicyResponse { content, usage })
    }
}

/// Role agents served by a chat-completion endpoint. Each input message is
/// sent as its own user message, prefixed with its source tag.
#[derive(Debug, Clone)]
pub struct RemoteRoles {
    client: ChatClient,
}

impl RemoteRoles {
    pub fn new(client: ChatClient) -> Self {
        Self { client }
    }
}

impl RoleBackend for RemoteRoles {
    fn respond(&self, request: &AgentRequest) -> Result<AgentResponse, AdapterError> {
        // no retrieval index is wired in
        if request.role == RoleName::Retrieval {
            return Ok(AgentResponse {
                content: NO_RETRIEVAL_CONTEXT.to_owned(),
                usage: TokenUsage::default(),
            });
        }
        let mut messages = Vec::with_capacity(request.messages.len() + 1);
        messages.push(ChatMessage::system(&request.system_prompt));
        messages.extend(
            request
                .messages
                .iter()
                .map(|m| ChatMessage::user(format!("[{}]\n{}", m.source, m.content))),
        );
        let (content, usage) = self.client.complete(&messages)?;
        Ok(AgentResponse { content, usage })
    }
}
