#include "sceneforge/http_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "sceneforge/errors.hpp"

namespace sceneforge {

using nlohmann::json;

namespace {

std::string base64(const std::string& in) {
    static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < in.size(); i += 3) {
        std::uint32_t chunk = static_cast<unsigned char>(in[i]) << 16;
        if (i + 1 < in.size()) chunk |= static_cast<unsigned char>(in[i + 1]) << 8;
        if (i + 2 < in.size()) chunk |= static_cast<unsigned char>(in[i + 2]);
        out.push_back(table[(chunk >> 18) & 63]);
        out.push_back(table[(chunk >> 12) & 63]);
        out.push_back(i + 1 < in.size() ? table[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < in.size() ? table[chunk & 63] : '=');
    }
    return out;
}

class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(std::string endpoint, std::string model, std::string key)
        : endpoint_(std::move(endpoint)), model_(std::move(model)), key_(std::move(key)) {}

    std::string describe(const Image& image, const std::string& prompt) override {
        json content = json::array();
        content.push_back({{"type", "text"}, {"text", prompt}});
        content.push_back(
            {{"type", "image_url"},
             {"image_url", {{"url", "data:image/x-portable-pixmap;base64," + base64(encode_ppm(image))}}}});
        return chat(std::move(content));
    }

    std::string complete(const std::string& prompt) override { return chat(prompt); }

private:
    std::string chat(json content) {
        json body = {
            {"model", model_},
            {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})},
        };
        httplib::Client client(endpoint_);
        client.set_read_timeout(120, 0);
        httplib::Headers headers = {{"Authorization", "Bearer " + key_}};
        auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (!res) throw Error("chat endpoint unreachable: " + endpoint_);
        if (res->status != 200) {
            throw Error("chat endpoint returned status " + std::to_string(res->status));
        }
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    }

    std::string endpoint_;
    std::string model_;
    std::string key_;
};

}  // namespace

bool http_key_available(const std::string& key_env_var) {
    const char* v = std::getenv(key_env_var.c_str());
    return v != nullptr && *v != '\0';
}

ClientPair http_clients(const std::string& endpoint, const std::string& model,
                        const std::string& key_env_var) {
    const char* key = std::getenv(key_env_var.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error("environment variable '" + key_env_var + "' is not set");
    }
    auto client = std::make_shared<HttpChatClient>(endpoint, model, key);
    return ClientPair{client, client};
}

}  // namespace sceneforge
