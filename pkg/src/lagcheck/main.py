from dotenv import load_dotenv
from rich import print

from .services.errors import LagCheckError
from .services.expsum import characteristic_roots
from .services.model import THERMO_MAX_ORDER, LagPair, Mode
from .services.spectral import (
    admissible_region,
    build_positivity_polynomial,
    classify,
    known_region_oracle,
    region_text,
)


def _ask(prompt: str, cast, default):
    raw = input(f"{prompt} [{default}]: ").strip()
    if not raw:
        return default
    return cast(raw)


def main():
    load_dotenv()
    print("[bold green]lagcheck: dual-phase-lag model walkthrough[/bold green]")
    try:
        n = _ask("Flux-side order n", int, 2)
        m = _ask("Gradient-side order m", int, 2)
        tau_q = _ask("tau_q (s)", float, 1.0)
        tau_t = _ask("tau_T (s)", float, 1.0)
    except ValueError as e:
        print(f"[red]Not a number: {e}. Exiting.[/red]")
        return

    try:
        # ---- Stability of the flux law ----
        if n >= 1:
            report = characteristic_roots(n)
            print("[bold]Characteristic roots (x = tau_q * lambda):[/bold]")
            for x in report.roots:
                print(f"- {x.real:+.6f} {x.imag:+.6f}i")
            print(f"Spectral abscissa {report.spectral_abscissa:.6g}: [bold]{report.classification.value}[/bold]")
        else:
            print("n = 0: Fourier-type flux law, no memory.")

        if n > THERMO_MAX_ORDER or m > THERMO_MAX_ORDER:
            print(f"[yellow]Orders above {THERMO_MAX_ORDER} are unstable; no Second-Law check.[/yellow]")
            return

        # ---- Second-Law verdict ----
        lags = LagPair(tau_q, tau_t)
        poly = build_positivity_polynomial(n, m, lags.ratio)
        print(f"[bold]Positivity polynomial[/bold] (powers of u' = (tau_q omega)^2): {list(poly.coefficients)}")
        for mode in (Mode.WEAK, Mode.STRICT):
            verdict = classify(n, m, lags, mode)
            line = f"- {mode.value}: {verdict.kind.value}"
            if not verdict.is_consistent(mode):
                line += f" (fails at omega = {verdict.witness_omega:.6g} 1/s)"
            print(line)

        # ---- Admissible ratios ----
        region = admissible_region(n, m)
        print(f"[bold]Admissible tau_T/tau_q:[/bold] {region_text(region.intervals)}")
        published = known_region_oracle(n, m)
        if published is not None:
            print(f"Published: {region_text(published.intervals)}")
    except LagCheckError as e:
        print(f"[red]{type(e).__name__}: {e}[/red]")


if __name__ == "__main__":
    main()
