#include "promptplan/external.hpp"

#include "promptplan/errors.hpp"
#include "promptplan/io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace promptplan {

namespace {

constexpr std::size_t kMaxLineBytes = std::size_t{1} << 28;

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

class FdChannel : public LineChannel {
  public:
    FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

    ~FdChannel() override { close_fds(); }

    void send_line(std::string_view line) override {
        std::string frame(line);
        frame.push_back('\n');
        std::size_t done = 0;
        while (done < frame.size()) {
            const ssize_t n = ::write(write_fd_, frame.data() + done, frame.size() - done);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw BackendUnavailable(std::string("write to backend failed: ") + std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    std::string receive_line(std::chrono::steady_clock::time_point deadline) override {
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            if (buffer_.size() > kMaxLineBytes) {
                throw ProtocolError("backend reply exceeds maximum line length");
            }
            const auto remaining =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (remaining.count() <= 0) {
                throw BackendUnavailable("backend did not reply before the timeout");
            }
            pollfd pfd{read_fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), INT32_MAX)));
            if (ready < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw BackendUnavailable(std::string("poll failed: ") + std::strerror(errno));
            }
            if (ready == 0) {
                continue; // deadline re-checked above
            }
            char chunk[65536];
            const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) {
                    continue;
                }
                throw BackendUnavailable(std::string("read from backend failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                throw BackendUnavailable("backend closed the connection");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

  protected:
    void close_fds() {
        if (read_fd_ >= 0) {
            ::close(read_fd_);
        }
        if (write_fd_ >= 0 && write_fd_ != read_fd_) {
            ::close(write_fd_);
        }
        read_fd_ = -1;
        write_fd_ = -1;
    }

  private:
    int read_fd_;
    int write_fd_;
    std::string buffer_;
};

class ChildChannel final : public FdChannel {
  public:
    ChildChannel(int read_fd, int write_fd, pid_t pid) : FdChannel(read_fd, write_fd), pid_(pid) {}

    ~ChildChannel() override {
        close_fds(); // child sees EOF on stdin
        for (int i = 0; i < 50; ++i) {
            int status = 0;
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
    }

  private:
    pid_t pid_;
};

using nlohmann::json;

double require_unit_score(const json& reply) {
    if (!reply.contains("score") || !reply.at("score").is_number()) {
        throw ProtocolError("reply lacks a numeric score");
    }
    const double score = reply.at("score").get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
        throw ProtocolError("score " + std::to_string(score) + " outside [0,1]");
    }
    return score;
}

Box box_from_wire(const json& j) {
    if (!j.is_array() || j.size() != 4 ||
        !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); })) {
        throw ProtocolError("box must be [x0,y0,x1,y1]");
    }
    Box box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!box.valid()) {
        throw ProtocolError("degenerate box in detection");
    }
    return box;
}

} // namespace

std::unique_ptr<LineChannel> spawn_child_channel(const std::string& command) {
    ignore_sigpipe();
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) {
        throw BackendUnavailable(std::string("pipe failed: ") + std::strerror(errno));
    }
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw BackendUnavailable(std::string("pipe failed: ") + std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    std::string script = "exec " + command;
    char sh[] = "/bin/sh";
    char dash_c[] = "-c";
    char* argv[] = {sh, dash_c, script.data(), nullptr};
    pid_t pid = 0;
    const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
        ::close(to_child[1]);
        ::close(from_child[0]);
        throw BackendUnavailable("cannot launch backend '" + command + "': " + std::strerror(rc));
    }
    spdlog::debug("spawned external backend pid {}: {}", pid, command);
    return std::make_unique<ChildChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& endpoint) {
    ignore_sigpipe();
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) {
        throw BackendUnavailable("TCP endpoint must be host:port, got '" + endpoint + "'");
    }
    const std::string host = endpoint.substr(0, colon);
    const std::string port = endpoint.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
        throw BackendUnavailable("cannot resolve " + endpoint + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            break;
        }
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(found);
    if (fd < 0) {
        throw BackendUnavailable("cannot connect to " + endpoint);
    }
    return std::make_unique<FdChannel>(fd, fd);
}

ExternalBackend::ExternalBackend(ExternalOptions options) : options_(std::move(options)) {
    if (options_.command.empty() && options_.tcp_endpoint.empty()) {
        throw std::invalid_argument("external backend needs a command or a TCP endpoint");
    }
}

ExternalBackend::~ExternalBackend() = default;

void ExternalBackend::disconnect() {
    channel_.reset();
    capabilities_.clear();
}

void ExternalBackend::connect() {
    disconnect();
    channel_ = options_.tcp_endpoint.empty() ? spawn_child_channel(options_.command)
                                             : connect_tcp_channel(options_.tcp_endpoint);
    try {
        channel_->send_line(json{{"type", "hello"}, {"version", kProtocolVersion}}.dump());
        const auto line = channel_->receive_line(std::chrono::steady_clock::now() + options_.timeout);
        const json ack = json::parse(line, nullptr, false);
        if (ack.is_discarded() || !ack.is_object() || ack.value("type", std::string{}) != "hello_ack") {
            throw ProtocolError("expected hello_ack, got: " + line.substr(0, 200));
        }
        if (!ack.contains("version") || ack.at("version") != kProtocolVersion) {
            throw ProtocolError("unsupported protocol version in hello_ack");
        }
        const auto& caps = ack.contains("capabilities") ? ack.at("capabilities") : json::array();
        if (!caps.is_array()) {
            throw ProtocolError("hello_ack capabilities must be an array");
        }
        for (const auto& c : caps) {
            if (!c.is_string()) {
                throw ProtocolError("hello_ack capabilities must be strings");
            }
            capabilities_.push_back(c.get<std::string>());
        }
    } catch (const BackendFailure&) {
        disconnect();
        throw;
    }
}

void ExternalBackend::require_capability(std::string_view name) const {
    if (std::find(capabilities_.begin(), capabilities_.end(), name) == capabilities_.end()) {
        throw ProtocolError("backend does not advertise capability '" + std::string(name) + "'");
    }
}

json ExternalBackend::exchange(json request, std::string_view reply_type) {
    const long long id = next_id_++;
    request["id"] = id;
    try {
        channel_->send_line(request.dump());
        const auto line = channel_->receive_line(std::chrono::steady_clock::now() + options_.timeout);
        json reply = json::parse(line, nullptr, false);
        if (reply.is_discarded() || !reply.is_object() || !reply.contains("type") || !reply.at("type").is_string()) {
            throw ProtocolError("malformed reply: " + line.substr(0, 200));
        }
        if (!reply.contains("id") || reply.at("id") != id) {
            throw ProtocolError("reply id does not echo request id " + std::to_string(id));
        }
        const auto type = reply.at("type").get<std::string>();
        if (type == "error") {
            throw RemoteError("backend error for request " + std::to_string(id) + ": " +
                              reply.value("message", std::string{"(no message)"}));
        }
        if (type != reply_type) {
            throw ProtocolError("expected '" + std::string(reply_type) + "' reply, got '" + type + "'");
        }
        return reply;
    } catch (const RemoteError&) {
        throw;
    } catch (const BackendFailure& e) {
        spdlog::warn("external backend: {}; dropping connection", e.what());
        disconnect();
        throw;
    }
}

std::vector<Detection> ExternalBackend::do_detect(const ImageInfo& image) {
    if (!connected()) {
        connect();
    }
    require_capability("detect");
    const json reply = exchange({{"type", "detect"}, {"image", image.image_id}}, "detections");
    try {
        if (!reply.contains("items") || !reply.at("items").is_array()) {
            throw ProtocolError("detections reply lacks an items array");
        }
        std::vector<Detection> out;
        for (const auto& item : reply.at("items")) {
            if (!item.is_object() || !item.contains("box") || !item.contains("category_id") ||
                !item.at("category_id").is_number_integer()) {
                throw ProtocolError("detection item needs box, integer category_id and score");
            }
            out.push_back({box_from_wire(item.at("box")), item.at("category_id").get<int>(), require_unit_score(item)});
        }
        return out;
    } catch (const ProtocolError&) {
        disconnect();
        throw;
    }
}

SegmentResult ExternalBackend::do_segment(const ImageInfo& image, const Prompt& prompt) {
    if (!connected()) {
        connect();
    }
    json wire_prompt;
    if (const auto* box = std::get_if<BoxPrompt>(&prompt)) {
        require_capability("segment_box");
        wire_prompt = {{"kind", "box"}, {"box", {box->box.x_min, box->box.y_min, box->box.x_max, box->box.y_max}}};
    } else {
        require_capability("segment_point");
        const auto& point = std::get<PointPrompt>(prompt);
        wire_prompt = {{"kind", "point"}, {"point", {point.x, point.y}}};
    }
    const json reply = exchange({{"type", "segment"}, {"image", image.image_id}, {"prompt", wire_prompt}}, "mask");
    try {
        if (!reply.contains("rle")) {
            throw ProtocolError("mask reply lacks rle");
        }
        RleMask rle;
        try {
            rle = rle_from_json(reply.at("rle"));
        } catch (const MalformedRle& e) {
            throw ProtocolError(std::string("invalid mask from backend: ") + e.what());
        }
        if (rle.width != image.width || rle.height != image.height) {
            throw ProtocolError("mask size " + std::to_string(rle.height) + "x" + std::to_string(rle.width) +
                                " does not match image " + std::to_string(image.height) + "x" +
                                std::to_string(image.width));
        }
        const double score = require_unit_score(reply);
        return {decode_rle(rle), score};
    } catch (const ProtocolError&) {
        disconnect();
        throw;
    }
}

} // namespace promptplan
