#pragma once

// Client side of the out-of-process model bridge.
//
// The bridge is a child process speaking one JSON object per line over
// stdin/stdout. Every request carries an integer "id" that the response
// echoes; responses arrive in request order.
//
//   -> {"id":1,"kind":"init","model_id":M,"prompt":P,"image_path":I}
//   <- {"id":1,"ok":true,"context_id":C,"d_h":D,"vocab":V,"eos":E,
//       "concurrent":false,"long_context":true}
//   -> {"id":2,"kind":"expand","context_id":C,"tokens":[...],"K":K}
//   <- {"id":2,"ok":true,"tokens":[...],"logprobs":[...],"hiddens":[[...],...]}
//   -> {"id":3,"kind":"detokenize","tokens":[...]}
//   <- {"id":3,"ok":true,"text":"..."}
//   -> {"id":4,"kind":"shutdown"}
//   <- {"id":4,"ok":true}
//
// Failures: {"id":N,"ok":false,"error":{"kind":K,"message":M}}.

#include <csignal>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

#include "dbd/core.hpp"
#include "dbd/model.hpp"

namespace dbd {

inline constexpr const char* kBridgeEnv = "DBD_BRIDGE";

namespace wire {

using json = nlohmann::json;

inline json init_request(std::uint64_t id, const std::string& model_id, const std::string& prompt,
                         const std::string& image_path) {
  return {{"id", id}, {"kind", "init"}, {"model_id", model_id}, {"prompt", prompt}, {"image_path", image_path}};
}

inline json expand_request(std::uint64_t id, std::uint64_t context_id, const std::vector<TokenId>& tokens,
                           std::size_t k) {
  json toks = json::array();
  for (TokenId t : tokens) toks.push_back(t.value);
  return {{"id", id}, {"kind", "expand"}, {"context_id", context_id}, {"tokens", toks}, {"K", k}};
}

inline json detokenize_request(std::uint64_t id, std::span<const TokenId> tokens) {
  json toks = json::array();
  for (TokenId t : tokens) toks.push_back(t.value);
  return {{"id", id}, {"kind", "detokenize"}, {"tokens", toks}};
}

inline json shutdown_request(std::uint64_t id) { return {{"id", id}, {"kind", "shutdown"}}; }

/// Throws ModelError for error responses and for correlation mismatches.
inline const json& check_response(const json& response, std::uint64_t id) {
  if (!response.is_object() || !response.contains("id"))
    throw ModelError("protocol", "response is not an object with an id");
  if (response.at("id").get<std::uint64_t>() != id)
    throw ModelError("protocol", "response id " + response.at("id").dump() + " does not match request " +
                                     std::to_string(id));
  if (!response.value("ok", false)) {
    const auto& err = response.contains("error") ? response.at("error") : json::object();
    throw ModelError(err.value("kind", std::string("unknown")), err.value("message", std::string("no message")));
  }
  return response;
}

inline ModelInfo parse_init(const json& r) {
  ModelInfo info;
  info.hidden_dim = r.at("d_h").get<std::size_t>();
  info.vocab_size = r.at("vocab").get<std::uint32_t>();
  info.eos = TokenId{r.at("eos").get<std::uint32_t>()};
  info.concurrent = r.value("concurrent", false);
  info.long_context = r.value("long_context", true);
  return info;
}

inline Expansion parse_expand(const json& r) {
  const auto& tokens = r.at("tokens");
  const auto& logprobs = r.at("logprobs");
  const auto& hiddens = r.at("hiddens");
  if (tokens.size() != logprobs.size() || tokens.size() != hiddens.size())
    throw ModelError("protocol", "expand response arrays differ in length");
  Expansion out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.push_back({TokenId{tokens[i].get<std::uint32_t>()}, logprobs[i].get<double>(),
                   hiddens[i].get<HiddenVector>()});
  return out;
}

}  // namespace wire

/// Child process with line-oriented pipes to its stdin and stdout.
class LineProcess {
 public:
  explicit LineProcess(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw ModelUnavailable("bridge: pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw ModelUnavailable("bridge: pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw ModelUnavailable("bridge: fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  ~LineProcess() {
    close_input();
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string data = line + '\n';
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      const ssize_t n = ::write(write_fd_, p, left);
      if (n <= 0) throw ModelUnavailable("bridge: process stopped accepting requests");
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n <= 0) throw ModelUnavailable("bridge: process exited or closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void close_input() {
    if (write_fd_ >= 0) close(write_fd_);
    write_fd_ = -1;
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

/// Model served by a bridge process. Calls are serialized.
class BridgeModel final : public Model {
 public:
  BridgeModel(const std::string& command, std::string model_id = {})
      : process_(command), model_id_(std::move(model_id)) {}

  ~BridgeModel() override {
    try {
      std::lock_guard lock(mutex_);
      const auto id = next_id_++;
      process_.write_line(wire::shutdown_request(id).dump());
      process_.read_line();
    } catch (...) {
    }
  }

  PromptContext open(const std::string& prompt, const std::string& image_path) override {
    const auto r = call([&](std::uint64_t id) { return wire::init_request(id, model_id_, prompt, image_path); });
    try {
      PromptContext ctx{r.at("context_id").get<std::uint64_t>(), wire::parse_init(r)};
      ctx.info.concurrent = false;  // requests are serialized on this side
      return ctx;
    } catch (const nlohmann::json::exception& e) {
      throw ModelError("protocol", std::string("bad init response: ") + e.what());
    }
  }

  Expansion expand(const PromptContext& context, const Candidate& candidate, std::size_t k) const override {
    if (candidate.context() != context.id)
      throw ContextMismatch("candidate belongs to context " + std::to_string(candidate.context()) +
                            ", expanded under " + std::to_string(context.id));
    if (candidate.finished()) throw InvalidArgument("cannot expand a finished candidate");
    if (k == 0) throw InvalidArgument("expansion width must be >= 1");
    const auto r = call([&](std::uint64_t id) { return wire::expand_request(id, context.id, candidate.tokens(), k); });
    try {
      return wire::parse_expand(r);
    } catch (const nlohmann::json::exception& e) {
      throw ModelError("protocol", std::string("bad expand response: ") + e.what());
    }
  }

  std::string detokenize(std::span<const TokenId> tokens) const override {
    const auto r = call([&](std::uint64_t id) { return wire::detokenize_request(id, tokens); });
    try {
      return r.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ModelError("protocol", std::string("bad detokenize response: ") + e.what());
    }
  }

 private:
  template <class MakeRequest>
  nlohmann::json call(MakeRequest&& make) const {
    std::lock_guard lock(mutex_);
    const auto id = next_id_++;
    process_.write_line(make(id).dump());
    const std::string line = process_.read_line();
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(line);
      wire::check_response(response, id);
    } catch (const nlohmann::json::exception&) {
      throw ModelError("protocol", "bridge sent a malformed response line");
    }
    return response;
  }

  mutable std::mutex mutex_;
  mutable LineProcess process_;
  mutable std::uint64_t next_id_ = 1;
  std::string model_id_;
};

}  // namespace dbd
