#include "hscan/scanar/clock.hpp"

#include <thread>

namespace hscan {

Duration SystemClock::now() {
    return std::chrono::duration_cast<Duration>(std::chrono::steady_clock::now().time_since_epoch());
}

void SystemClock::sleep_for(Duration d) {
    if (d > Duration::zero()) std::this_thread::sleep_for(d);
}

Duration VirtualClock::now() {
    std::lock_guard lock(mutex_);
    return now_;
}

void VirtualClock::sleep_for(Duration d) {
    if (d <= Duration::zero()) return;
    std::lock_guard lock(mutex_);
    now_ += d;
    slept_ += d;
}

Duration VirtualClock::total_slept() const {
    std::lock_guard lock(mutex_);
    return slept_;
}

Duration IntervalGate::wait() {
    if (last_) {
        const Duration elapsed = clock_->now() - *last_;
        if (elapsed < interval_) clock_->sleep_for(interval_ - elapsed);
    }
    last_ = clock_->now();
    starts_.push_back(*last_);
    return *last_;
}

}  // namespace hscan
