#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <vector>

namespace hscan {

using Duration = std::chrono::milliseconds;

/// Monotonic time source. Retrieval code never reads wall time directly so
/// that delay contracts can be checked against a VirtualClock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Duration now() = 0;
    virtual void sleep_for(Duration d) = 0;
};

class SystemClock final : public Clock {
public:
    Duration now() override;
    void sleep_for(Duration d) override;
};

/// Time only moves when someone sleeps. Thread-safe.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(Duration start = Duration{0}) : now_(start) {}

    Duration now() override;
    void sleep_for(Duration d) override;
    void advance(Duration d) { sleep_for(d); }
    Duration total_slept() const;

private:
    mutable std::mutex mutex_;
    Duration now_;
    Duration slept_{0};
};

/// Enforces a minimum spacing between consecutive starts of an action.
class IntervalGate {
public:
    IntervalGate(Clock& clock, Duration interval) : clock_(&clock), interval_(interval) {}

    /// Sleeps until `interval` has elapsed since the previous start, then
    /// records and returns the new start time.
    Duration wait();

    const std::vector<Duration>& starts() const { return starts_; }

private:
    Clock* clock_;
    Duration interval_;
    std::optional<Duration> last_;
    std::vector<Duration> starts_;
};

}  // namespace hscan
