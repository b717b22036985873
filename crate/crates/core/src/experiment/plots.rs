//! Standalone matplotlib scripts reading the CSV tables next to them.

const HEAD: &str = "import csv, os, sys\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\nhere = os.path.dirname(os.path.abspath(__file__))\n\n\ndef rows(name):\n    with open(os.path.join(here, name)) as f:\n        return list(csv.DictReader(f))\n\n\n";

fn script(body: &str) -> String {
    format!("{HEAD}{body}")
}

pub fn paths() -> String {
    script(
        "r = rows(\"paths.csv\")\nt = [float(x[\"t\"]) for x in r]\nfor k in [k for k in r[0] if k != \"t\"]:\n    plt.plot(t, [float(x[k]) for x in r], lw=0.6)\nplt.xlabel(\"t\")\nplt.ylabel(\"W(t)\")\nplt.savefig(os.path.join(here, \"paths.png\"), dpi=150)\n",
    )
}

pub fn residuals() -> String {
    script(
        "r = rows(\"levels.csv\")\nstep = [float(x[\"step\"]) for x in r]\nfor k in [\"residual_rms\", \"residual_literal_rms\", \"residual_displayed_rms\"]:\n    if k in r[0]:\n        ys = [float(x[k]) for x in r]\n        if all(y > 0 for y in ys):\n            plt.loglog(step, ys, \"o-\", label=k)\nplt.xlabel(\"step\")\nplt.ylabel(\"residual RMS\")\nplt.legend()\nplt.savefig(os.path.join(here, \"residuals.png\"), dpi=150)\n",
    )
}

pub fn moments() -> String {
    script(
        "r = rows(\"moments.csv\")\nplt.loglog([float(x[\"gap_time\"]) for x in r], [float(x[\"moment\"]) for x in r], \"o-\")\nplt.xlabel(\"|t - s|\")\nplt.ylabel(\"moment^(1/ell)\")\nplt.savefig(os.path.join(here, \"moments.png\"), dpi=150)\n",
    )
}

pub fn solution() -> String {
    script(
        "r = rows(\"solution.csv\")\nt = [float(x[\"t\"]) for x in r]\nplt.plot(t, [float(x[\"Y\"]) for x in r], label=\"Y\")\nplt.plot(t, [float(x[\"X\"]) for x in r], label=\"X = Y + W\")\nplt.legend()\nplt.xlabel(\"t\")\nplt.savefig(os.path.join(here, \"solution.png\"), dpi=150)\n",
    )
}

pub fn crosscheck() -> String {
    script(
        "r = rows(\"crosscheck.csv\")\nt = [float(x[\"t\"]) for x in r]\nplt.plot(t, [float(x[\"X_young\"]) for x in r], label=\"Young\")\nplt.plot(t, [float(x[\"X_euler\"]) for x in r], \"--\", label=\"Euler\")\nplt.legend()\nplt.xlabel(\"t\")\nplt.savefig(os.path.join(here, \"crosscheck.png\"), dpi=150)\n",
    )
}

pub fn stress() -> String {
    script(
        "r = rows(\"stress.csv\")\nk = [float(x[\"cutoff\"]) for x in r]\nfor c in [\"noise\", \"noise_trapezoid\", \"control\"]:\n    plt.loglog(k, [float(x[c]) for x in r], \"o-\", label=c)\nplt.xlabel(\"K\")\nplt.legend()\nplt.savefig(os.path.join(here, \"stress.png\"), dpi=150)\n",
    )
}
