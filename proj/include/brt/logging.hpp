#pragma once

#include <iostream>
#include <mutex>
#include <string>
#include <vector>

namespace brt {

// Serialized log sink. Modules report data-quality signals (masked rows,
// clipped perturbations, skipped features) here; tests inspect the records.
class LogSink {
public:
    void record(const std::string& msg) {
        std::lock_guard<std::mutex> lock(mu_);
        records_.push_back(msg);
        if (echo_) std::cerr << "[brt] " << msg << "\n";
    }

    std::vector<std::string> snapshot() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_;
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_.size();
    }

    void set_echo(bool on) { echo_ = on; }

    static LogSink& global() {
        static LogSink sink;
        return sink;
    }

private:
    mutable std::mutex mu_;
    std::vector<std::string> records_;
    bool echo_ = false;
};

} // namespace brt
