#include "promptplan/batch.hpp"
#include "promptplan/errors.hpp"
#include "promptplan/external.hpp"
#include "promptplan/io.hpp"
#include "promptplan/scene.hpp"

#include <gtest/gtest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>

using namespace promptplan;
namespace fs = std::filesystem;

namespace {

class ExternalTest : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("promptplan_ext_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        json index{{"scenes", json::array()}};
        for (int i = 0; i < 4; ++i) {
            auto s = synth_scene(96, 80, 6, static_cast<std::uint64_t>(100 + i));
            s.image_id = "ext_" + std::to_string(i);
            save_scene(s, dir_ / (s.image_id + ".json"));
            index["scenes"].push_back({{"file", s.image_id + ".json"}});
            scenes_.push_back(std::move(s));
        }
        write_file_atomic(dir_ / "index.json", index.dump());
    }

    static void TearDownTestSuite() {
        fs::remove_all(dir_);
        scenes_.clear();
    }

    static std::string stub(const std::string& extra = "") {
        return std::string("'") + STUB_BACKEND_PATH + "' --fixtures '" + dir_.string() + "' " + extra;
    }

    static ExternalOptions options(const std::string& extra = "", int timeout_ms = 10000) {
        ExternalOptions o;
        o.command = stub(extra);
        o.timeout = std::chrono::milliseconds(timeout_ms);
        return o;
    }

    static inline fs::path dir_;
    static inline std::vector<SceneAnnotation> scenes_;
};

void expect_same_outcomes(const std::vector<ImageOutcome>& a, const std::vector<ImageOutcome>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].image_id, b[i].image_id);
        EXPECT_EQ(a[i].ok, b[i].ok);
        ASSERT_EQ(a[i].masks.size(), b[i].masks.size()) << a[i].image_id;
        for (std::size_t k = 0; k < a[i].masks.size(); ++k) {
            EXPECT_EQ(a[i].masks[k].result.mask, b[i].masks[k].result.mask);
            EXPECT_EQ(a[i].masks[k].result.score, b[i].masks[k].result.score);
            EXPECT_EQ(a[i].masks[k].provenance, b[i].masks[k].provenance);
            EXPECT_EQ(a[i].masks[k].category_id, b[i].masks[k].category_id);
        }
        EXPECT_EQ(a[i].stats.segmenter_calls, b[i].stats.segmenter_calls);
        EXPECT_EQ(a[i].stats.detector_calls, b[i].stats.detector_calls);
    }
}

} // namespace

TEST_F(ExternalTest, HandshakeAdvertisesCapabilities) {
    ExternalBackend backend(options());
    backend.connect();
    EXPECT_TRUE(backend.connected());
    EXPECT_EQ(backend.capabilities(), (std::vector<std::string>{"detect", "segment_box", "segment_point"}));
}

TEST_F(ExternalTest, PointPromptRoundTrip) {
    ExternalBackend backend(options());
    const auto& s = scenes_[0];
    const auto r = backend.segment(s.info(), PointPrompt{0.5, 0.5});
    EXPECT_EQ(r.mask.width(), s.width);
    EXPECT_EQ(r.mask.height(), s.height);
    EXPECT_GT(r.score, 0.0);
    EXPECT_EQ(backend.segmenter_calls(), 1u);
}

TEST_F(ExternalTest, MatchesInProcessOracleForEveryMode) {
    for (auto mode : {Mode::boxes_only, Mode::hybrid, Mode::hierarchical}) {
        PipelineConfig config;
        config.mode = mode;
        BackendSpec oracle;
        oracle.recall = 0.6;
        oracle.seed = 3;
        BackendSpec external;
        external.kind = BackendSpec::Kind::external;
        external.external = options("--recall 0.6 --seed 3");
        expect_same_outcomes(run_batch(scenes_, config, oracle, 1), run_batch(scenes_, config, external, 2));
    }
}

TEST_F(ExternalTest, SumMismatchIsProtocolErrorAndReconnects) {
    ExternalBackend backend(options("--mode bad-rle"));
    const auto& s = scenes_[0];
    EXPECT_THROW(backend.segment(s.info(), PointPrompt{1, 1}), ProtocolError);
    EXPECT_FALSE(backend.connected());
    EXPECT_NO_THROW(backend.detect(s.info()));
    EXPECT_TRUE(backend.connected());
}

TEST_F(ExternalTest, WrongMaskSizeIsProtocolError) {
    ExternalBackend backend(options("--mode wrong-size"));
    EXPECT_THROW(backend.segment(scenes_[0].info(), PointPrompt{1, 1}), ProtocolError);
}

TEST_F(ExternalTest, GarbageAndWrongIdAreProtocolErrors) {
    ExternalBackend garbage(options("--mode garbage"));
    EXPECT_THROW(garbage.detect(scenes_[0].info()), ProtocolError);
    ExternalBackend wrong_id(options("--mode wrong-id"));
    EXPECT_THROW(wrong_id.detect(scenes_[0].info()), ProtocolError);
}

TEST_F(ExternalTest, VersionMismatchFailsHandshake) {
    ExternalBackend backend(options("--mode bad-version"));
    EXPECT_THROW(backend.connect(), ProtocolError);
}

TEST_F(ExternalTest, ErrorFrameKeepsConnection) {
    ExternalBackend backend(options("--mode error"));
    EXPECT_THROW(backend.detect(scenes_[0].info()), RemoteError);
    EXPECT_TRUE(backend.connected());
}

TEST_F(ExternalTest, DelayBeyondTimeoutIsUnavailable) {
    ExternalBackend backend(options("--mode slow --delay-ms 2000", 200));
    const auto start = std::chrono::steady_clock::now();
    EXPECT_THROW(backend.detect(scenes_[0].info()), BackendUnavailable);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(1500));
}

TEST_F(ExternalTest, ProcessExitIsUnavailable) {
    ExternalBackend backend(options("--mode die"));
    EXPECT_THROW(backend.segment(scenes_[0].info(), PointPrompt{1, 1}), BackendUnavailable);
}

TEST_F(ExternalTest, MissingCommandIsUnavailable) {
    ExternalOptions o;
    o.command = "/nonexistent/backend-binary";
    ExternalBackend backend(o);
    EXPECT_THROW(backend.connect(), BackendUnavailable);
}

TEST_F(ExternalTest, MissingCapabilityIsRejected) {
    ExternalBackend backend(options("--capabilities detect segment_box"));
    EXPECT_THROW(backend.segment(scenes_[0].info(), PointPrompt{1, 1}), ProtocolError);
}

TEST_F(ExternalTest, BadImageIsIsolatedWithinBatch) {
    PipelineConfig config;
    BackendSpec external;
    external.kind = BackendSpec::Kind::external;
    external.external = options("--mode bad-rle --bad-image ext_1");
    const auto got = run_batch(scenes_, config, external, 1);
    const auto want = run_batch(scenes_, config, BackendSpec{}, 1);
    ASSERT_EQ(got.size(), 4u);
    EXPECT_FALSE(got[1].ok);
    EXPECT_NE(got[1].error.find("RLE"), std::string::npos) << got[1].error;
    for (std::size_t i : {0u, 2u, 3u}) {
        EXPECT_TRUE(got[i].ok);
        ASSERT_EQ(got[i].masks.size(), want[i].masks.size());
        for (std::size_t k = 0; k < got[i].masks.size(); ++k) {
            EXPECT_EQ(got[i].masks[k].result.mask, want[i].masks[k].result.mask);
        }
    }
}

TEST_F(ExternalTest, TcpTransport) {
    int out[2];
    ASSERT_EQ(::pipe(out), 0);
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        ::dup2(out[1], STDOUT_FILENO);
        ::close(out[0]);
        ::close(out[1]);
        const std::string fixtures = dir_.string();
        ::execl(STUB_BACKEND_PATH, STUB_BACKEND_PATH, "--fixtures", fixtures.c_str(), "--listen", "0",
                static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(out[1]);
    std::string port;
    char c = 0;
    while (::read(out[0], &c, 1) == 1 && c != '\n') {
        port += c;
    }
    ::close(out[0]);
    ASSERT_FALSE(port.empty());

    ExternalOptions o;
    o.tcp_endpoint = "127.0.0.1:" + port;
    {
        ExternalBackend backend(o);
        const auto& s = scenes_[2];
        const auto dets = backend.detect(s.info());
        EXPECT_EQ(dets.size(), s.instances.size());
        const auto r = backend.segment(s.info(), BoxPrompt{dets[0].box, std::nullopt});
        EXPECT_EQ(r.score, 1.0);
        EXPECT_EQ(r.mask, s.instances[0].mask);
    }
    ::kill(pid, SIGTERM);
    ::waitpid(pid, nullptr, 0);
}
