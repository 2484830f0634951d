#include "protegi/bandit_bench.hpp"
#include "protegi/sim_backend.hpp"
#include "protegi/task_eval.hpp"
#include "protegi/templates.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>

using namespace protegi;

namespace {

template <typename F>
double best_of(int reps, F&& f)
{
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial, double parallel, bool same)
{
    std::printf("%-22s serial %8.4f s  parallel %8.4f s  speedup %5.2fx  outputs %s\n", name, serial, parallel,
                serial / parallel, same ? "identical" : "DIFFER");
}

} // namespace

int main()
{
    std::printf("threads: %d\n", omp_get_max_threads());

    const Dataset data = make_synthetic_dataset(20000, 7);
    SimBackend backend(SimProfile{}, 11, {&data});
    const auto prompt = make_initial_prompt(std::string(*builtin_task_prompt("ethos")));
    const FewShotSet fs = select_few_shot(data, 2, 3);
    const auto& examples = data.examples();

    std::vector<PredictionRecord> a, b;
    const double es = best_of(3, [&] { a = evaluate_serial(backend, prompt, fs, examples); });
    const double ep = best_of(3, [&] { b = evaluate(backend, prompt, fs, examples); });
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
        same = a[i].raw_completion == b[i].raw_completion && a[i].example_id == b[i].example_id;
    report("evaluate (20000 ex)", es, ep, same);

    BanditBenchConfig cfg;
    std::vector<BanditCell> cs, cp;
    const double bs = best_of(1, [&] { cs = run_bandit_bench_serial(cfg); });
    const double bp = best_of(1, [&] { cp = run_bandit_bench(cfg); });
    bool same_cells = cs.size() == cp.size();
    for (std::size_t i = 0; same_cells && i < cs.size(); ++i)
        same_cells = cs[i].identified == cp[i].identified && cs[i].max_spent == cp[i].max_spent;
    report("bandit bench (2000 tr)", bs, bp, same_cells);
    return same && same_cells ? 0 : 1;
}
