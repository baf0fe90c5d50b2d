"""Print the sail equilibria near L2 for the three reference attitudes."""

from common import CASES, aep

REFERENCE = {
    "a80_g0": (1.0100319725242741, 0.0, 1.4769123813475747e-5),
    "a0_g40": (1.009817129039308, 0.0, 0.0),
    "a80_g40": (1.0100319689420738, -1.2720500232390416e-5, 1.1313805251204233e-5),
}

if __name__ == "__main__":
    for name, (alpha, gamma) in CASES.items():
        point = aep(alpha, gamma)
        worst = max(abs(a - b) for a, b in zip(point.position, REFERENCE[name]))
        print(f"{name}: {point.position.tolist()}  max deviation {worst:.1e}  residual {point.residual_norm:.1e}")
