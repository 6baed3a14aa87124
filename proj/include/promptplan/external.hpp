#pragma once

#include "promptplan/backend.hpp"

#include <json.hpp>

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace promptplan {

inline constexpr int kProtocolVersion = 1;

struct ExternalOptions {
    // Shell command for a child process speaking the protocol on stdin/stdout.
    std::string command;
    // "host:port"; when set, a TCP connection is used instead of a child.
    std::string tcp_endpoint;
    std::chrono::milliseconds timeout{30000};
};

/// Newline-delimited transport to a backend.
class LineChannel {
  public:
    virtual ~LineChannel() = default;
    virtual void send_line(std::string_view line) = 0;
    // Throws BackendUnavailable on EOF or when the deadline passes.
    virtual std::string receive_line(std::chrono::steady_clock::time_point deadline) = 0;
};

std::unique_ptr<LineChannel> spawn_child_channel(const std::string& command);
std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& endpoint);

/// Client for an out-of-process detector/segmenter.
///
/// One request is in flight at a time and every reply must echo the
/// request id. Any transport or framing failure drops the connection; the
/// next call reconnects and repeats the handshake. Masks that violate the
/// RLE invariants or do not match the image size are rejected with
/// ProtocolError before reaching the caller.
class ExternalBackend final : public Detector, public Segmenter {
  public:
    explicit ExternalBackend(ExternalOptions options);
    ~ExternalBackend() override;

    ExternalBackend(const ExternalBackend&) = delete;
    ExternalBackend& operator=(const ExternalBackend&) = delete;

    // Opens the channel and performs the hello/hello_ack exchange.
    void connect();
    void disconnect();
    bool connected() const { return channel_ != nullptr; }

    const std::vector<std::string>& capabilities() const { return capabilities_; }

  protected:
    std::vector<Detection> do_detect(const ImageInfo& image) override;
    SegmentResult do_segment(const ImageInfo& image, const Prompt& prompt) override;

  private:
    nlohmann::json exchange(nlohmann::json request, std::string_view reply_type);
    void require_capability(std::string_view name) const;

    ExternalOptions options_;
    std::unique_ptr<LineChannel> channel_;
    std::vector<std::string> capabilities_;
    long long next_id_ = 1;
};

} // namespace promptplan
