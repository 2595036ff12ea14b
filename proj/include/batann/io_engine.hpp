#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

namespace batann {

inline constexpr std::uint32_t kSectorSize = 4096;

struct IoCompletion {
  std::uint64_t token = 0;
  std::uint32_t sector = 0;
  std::int32_t status = 0;          // 0 ok, else errno
  const std::uint8_t* data = nullptr;
  std::uint32_t buf_id = 0;         // pass back via release()
};

/// Asynchronous sector-read contract. One engine instance per worker
/// thread: submit() and poll() are called from that thread only. submit()
/// never blocks on device completion; completions appear in later poll()
/// calls and own their buffer until release().
class IoEngine {
 public:
  virtual ~IoEngine() = default;
  virtual void submit(std::uint32_t sector, std::uint64_t token) = 0;
  virtual std::size_t poll(std::vector<IoCompletion>& out) = 0;
  virtual void release(std::uint32_t buf_id) = 0;
  /// Monotone count of physical sector reads issued.
  virtual std::uint64_t reads_issued() const = 0;
};

/// Test and latency-model device: the sector payload lives in memory and a
/// submitted read becomes ready latency_us after submission.
class FakeIoEngine : public IoEngine {
 public:
  FakeIoEngine(std::shared_ptr<const std::vector<std::uint8_t>> sectors,
               std::uint32_t latency_us)
      : sectors_(std::move(sectors)), latency_us_(latency_us) {}

  void submit(std::uint32_t sector, std::uint64_t token) override;
  std::size_t poll(std::vector<IoCompletion>& out) override;
  void release(std::uint32_t) override {}
  std::uint64_t reads_issued() const override { return reads_; }

 private:
  struct Pending {
    std::uint64_t token;
    std::uint32_t sector;
    std::chrono::steady_clock::time_point ready;
  };
  std::shared_ptr<const std::vector<std::uint8_t>> sectors_;
  std::uint32_t latency_us_;
  std::deque<Pending> pending_;
  std::uint64_t reads_ = 0;
};

/// File-backed engine: a helper thread services pread() so the submitting
/// worker never blocks on the device. Buffers are 4096-aligned and pooled.
class ThreadIoEngine : public IoEngine {
 public:
  ThreadIoEngine(const std::string& path, std::uint64_t data_offset,
                 std::uint32_t queue_depth = 128, bool use_direct = false);
  ~ThreadIoEngine() override;

  void submit(std::uint32_t sector, std::uint64_t token) override;
  std::size_t poll(std::vector<IoCompletion>& out) override;
  void release(std::uint32_t buf_id) override;
  std::uint64_t reads_issued() const override { return reads_.load(std::memory_order_relaxed); }

  bool direct_io() const { return direct_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::uint64_t> reads_{0};
  bool direct_ = false;
};

}  // namespace batann
