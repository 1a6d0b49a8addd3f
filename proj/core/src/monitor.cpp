#include "idt/monitor.hpp"

#include <exception>
#include <thread>

#include "idt/bounded_queue.hpp"
#include "idt/discretizer.hpp"
#include "idt/records.hpp"

namespace idt {

MonitorStats run_monitor(LineSource& source, const BaselineBundle& bundle,
                         const MonitorOptions& options, const MonitorSinks& sinks) {
  bundle.window.validate();
  OnlineDetector detector(bundle.baseline, options.threshold,
                          options.min_consecutive, options.onset_step);
  WindowAccumulator accumulator(bundle.window);
  BoundedQueue<Transition> queue(bundle.window.stride);
  std::exception_ptr reader_error;

  std::jthread reader([&] {
    try {
      TransitionReader in(source);
      while (queue.acquire()) {
        auto x = in.next();
        if (!x) {
          break;
        }
        queue.push(std::move(*x));
      }
    } catch (...) {
      reader_error = std::current_exception();
    }
    queue.close();
  });

  MonitorStats stats;
  try {
    while (auto x = queue.pop()) {
      const auto symbols = discretize(*x, bundle.discretizer, bundle.grouping);
      ++stats.transitions;
      if (auto m = accumulator.push(symbols)) {
        ++stats.windows;
        if (sinks.metrics) {
          sinks.metrics(*m);
        }
        for (const auto& e : detector.observe(*m)) {
          ++stats.events;
          if (sinks.events) {
            sinks.events(e);
          }
        }
      }
      queue.release();
    }
  } catch (...) {
    queue.close();
    reader.join();
    throw;
  }
  reader.join();
  if (reader_error) {
    std::rethrow_exception(reader_error);
  }
  return stats;
}

}  // namespace idt
