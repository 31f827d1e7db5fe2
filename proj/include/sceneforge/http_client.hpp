#pragma once

#include <string>

#include "sceneforge/annotator.hpp"

namespace sceneforge {

/// Reference live client speaking an HTTP chat-completion wire format
/// (POST {endpoint}/v1/chat/completions). Images travel as base64 PPM data
/// URLs. The API key is read from the named environment variable; both
/// capabilities share one backend.
ClientPair http_clients(const std::string& endpoint, const std::string& model,
                        const std::string& key_env_var);

/// True when the key environment variable is set and non-empty.
bool http_key_available(const std::string& key_env_var);

}  // namespace sceneforge
