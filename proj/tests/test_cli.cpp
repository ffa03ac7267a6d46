// End-to-end checks of the qsplit binary. The binary path arrives as argv[1]
// from the ctest registration.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
    if (ok) {
        std::cout << "[ok] " << what << "\n";
    } else {
        std::cout << "[FAIL] " << what << "\n";
        ++failures;
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& command) {
    const int status = std::system(command.c_str());
    return status < 0 ? status : WEXITSTATUS(status);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: qsplit_cli_tests <path-to-qsplit>\n";
        return 2;
    }
    const std::string bin = argv[1];
    const auto dir = std::filesystem::temp_directory_path() / "qsplit_cli";
    std::filesystem::create_directories(dir);
    const std::string signs = (dir / "signs.csv").string();
    const std::string disc = (dir / "disc.csv").string();
    const std::string decomp = (dir / "decomp.csv").string();
    const std::string lin = (dir / "lin.csv").string();
    const std::string svg = (dir / "lin.svg").string();

    expect(run(bin + " seq --base 2 --count 4 --emit signs --out " + signs) == 0,
           "seq signs exits 0");
    const std::string signs_text = slurp(signs);
    expect(signs_text.find("n,z,xi,S_n\n1,0.5,1,1\n2,0.25,-1,0\n") != std::string::npos,
           "seq signs content matches the base-2 stream");

    expect(run(bin + " seq --base 3 --count 64 --emit discrepancy --out " + disc) == 0,
           "seq discrepancy exits 0");
    const std::string disc_text = slurp(disc);
    expect(disc_text.rfind("N,Dstar,bound\n", 0) == 0, "discrepancy header");
    expect(run(bin + " seq --base 2 --count 6 --emit decomposition --tau 0.1 --out " +
               decomp) == 0,
           "seq decomposition exits 0");
    const std::string decomp_text = slurp(decomp);
    expect(decomp_text.find("pair,1,2") != std::string::npos, "decomposition pairs (1,2)");
    expect(decomp_text.find("tv,0,") != std::string::npos, "decomposition tv residual 0");
    expect(decomp_text.find("w,1,0.1") != std::string::npos, "decomposition W_1 = 0.1");

    expect(run(bin + " linear --m 6 --p 2 --T 1 --taus 2^-3..2^-5 --policies qr,lie" +
               std::string(" --seed 4 --out ") + lin) == 0,
           "linear sweep exits 0");
    const std::string lin_text = slurp(lin);
    expect(lin_text.rfind("config_hash,policy,tau,norm,max_err,mean_err,std_err,subflow_evals\n",
                          0) == 0,
           "linear CSV header");
    expect(run(bin + " report --in " + lin + " --svg " + svg) == 0, "report exits 0");
    expect(slurp(svg).find("<svg") != std::string::npos, "report writes an SVG");

    const std::string cfg = (dir / "sweep.ini").string();
    {
        std::ofstream ini(cfg);
        ini << "[linear]\nm=10\np=2\ntaus=2^-3..2^-5\npolicies=qr\nseed=9\n";
    }
    const std::string from_cfg = (dir / "from_cfg.csv").string();
    expect(run(bin + " --config " + cfg + " linear --out " + from_cfg) == 0,
           "config-file driven sweep exits 0");
    expect(slurp(from_cfg).find("qr,0.125,l2") != std::string::npos,
           "config file values reach the sweep");

    expect(run(bin + " linear --taus nonsense --out /dev/null 2>/dev/null") == 1,
           "bad tau list exits 1");
    expect(run(bin + " seq --count 4 --emit bogus --out /dev/null 2>/dev/null") != 0,
           "bad emit mode rejected");

    if (failures == 0) std::cout << "all cli checks passed\n";
    return failures == 0 ? 0 : 1;
}
