# finsler_lab.py

import argparse
import logging
import sys

from finslab import operations, settings
from finslab.errors import CatalogError, ConfigError, EvaluationError, FinslabError

# Códigos de saída
EXIT_OK = 0
EXIT_PREDICATE = 1
EXIT_USAGE = 2
EXIT_EVALUATION = 3

logger = logging.getLogger("finsler_lab")


def _value(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"Parâmetro deve ser chave=valor: '{item}'")
        out[key.strip()] = _value(value.strip())
    return out


def _tolerances(items) -> dict:
    """'1e-8' vale para todos os predicados; 'berwald=1e-8' só para um."""
    out = {}
    for item in items or []:
        if "=" in item:
            key, _, value = item.partition("=")
            out[key.strip()] = float(value)
        else:
            out.update({name: float(item) for name in settings.DEFAULT_TOLERANCES})
    return out


def _vector(text):
    if text is None:
        return None
    return [float(v) for v in text.split(",")]


def _grid(args) -> dict | None:
    grid = {}
    if args.grid:
        nx, _, ny = args.grid.partition("x")
        grid["x_points"] = int(nx)
        if ny:
            grid["y_directions"] = int(ny)
    if args.box:
        grid["box"] = [tuple(float(v) for v in part.split(":")) for part in args.box.split(",")]
    if args.seed is not None:
        grid["seed"] = args.seed
    return grid or None


def _config(args):
    metric = None
    if args.metric:
        metric = {"catalog": args.metric, "params": _params(args.params)}
    overrides = {
        "metric": metric,
        "grid": _grid(args),
        "tolerances": _tolerances(args.tol) or None,
        "output": args.out,
        "format": args.format,
        "jobs": args.jobs,
    }
    if getattr(args, "predicates", None):
        overrides["predicates"] = args.predicates
    return operations.load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Laboratório numérico de (α, β)-métricas de Finsler")
    parser.add_argument("action", choices=["compute", "classify", "ode-phi", "catalog", "verify"],
                        help="Ação a ser realizada")
    parser.add_argument("--config", help="Arquivo YAML de configuração")
    parser.add_argument("--metric", help="Nome da entrada de catálogo")
    parser.add_argument("--params", nargs="*", help="Parâmetros chave=valor da métrica")
    parser.add_argument("--grid", help="Contagens da grade, ex.: 16x32")
    parser.add_argument("--box", help="Caixa em x, ex.: -0.5:0.5,-0.5:0.5")
    parser.add_argument("--tol", nargs="*", help="Tolerâncias: valor único ou predicado=valor")
    parser.add_argument("--out", help="Arquivo de saída do relatório")
    parser.add_argument("--format", choices=["yaml", "csv"], default=None, help="Formato do relatório")
    parser.add_argument("--seed", type=int, help="Semente da grade")
    parser.add_argument("--jobs", type=int, help="Processos para varrer a grade")
    parser.add_argument("--predicates", nargs="*", help="Predicados para classify")
    parser.add_argument("--what", default="G", help="Tensor para compute (G, B, E, D, R, S, QTPD...)")
    parser.add_argument("--x", help="Ponto base, ex.: 0.1,0")
    parser.add_argument("--y", help="Direção, ex.: 1,0")
    parser.add_argument("--s", type=float, help="Valor de s para QTPD")
    parser.add_argument("--k", type=float, default=settings.ODE_DEFAULT_K, help="Constante k da EDO de φ")
    parser.add_argument("--n", type=int, default=settings.ODE_DEFAULT_N, help="Dimensão na EDO de φ")
    parser.add_argument("--b", type=float, default=settings.ODE_DEFAULT_B, help="b na EDO de φ")
    parser.add_argument("--Q0", type=float, default=0.0, help="Q(0)")
    parser.add_argument("--Q0p", type=float, default=0.0, help="Q'(0)")
    parser.add_argument("--points", type=int, default=settings.ODE_TABLE_POINTS, help="Linhas da tabela de ode-phi")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="Mais registros (-v, -vv)")
    return parser


def run(args) -> int:
    fmt = args.format or "yaml"
    if args.action == "catalog":
        print(operations.write_report(operations.run_catalog(), args.out, fmt), end="")
        return EXIT_OK

    if args.action == "ode-phi":
        rows = operations.run_ode_phi(args.k, args.n, args.b, args.Q0, args.Q0p, args.points)
        print(operations.write_report(rows, args.out, fmt), end="")
        return EXIT_OK

    if args.action == "verify":
        summary = operations.run_verify(
            seed=args.seed if args.seed is not None else settings.GRID_SEED,
            tolerances=_tolerances(args.tol),
            jobs=args.jobs or 1,
        )
        print(operations.write_report(summary, args.out, fmt), end="")
        return EXIT_OK if summary.passed else EXIT_PREDICATE

    config = _config(args)
    fmt = config.format
    if args.action == "compute":
        if args.x is None:
            raise ConfigError("compute precisa de --x")
        report = operations.run_compute(config, _vector(args.x), _vector(args.y), args.what, args.s)
        print(operations.write_report(report, config.output, fmt), end="")
        return EXIT_OK

    reports = operations.run_classify(config)
    print(operations.write_report(reports, config.output, fmt), end="")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PREDICATE


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    # Erros viram códigos de saída aqui, e só aqui
    try:
        return run(args)
    except EvaluationError as e:
        print(f"Erro de avaliação: {e}", file=sys.stderr)
        return EXIT_EVALUATION
    except (ConfigError, CatalogError, FinslabError) as e:
        print(f"Erro de uso: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
