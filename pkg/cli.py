"""命令行入口

每个子命令输出一个信封 {success, message, config, data}；config 是解析后的
完整配置，同一组参数重跑得到逐字节相同的输出。退出码：0 成功，
1 数值校验失败或积分不收敛，2 参数非法。
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import Any, Dict, List, Sequence

import numpy as np
from pydantic import ValidationError
from sqlalchemy.exc import SQLAlchemyError

from hardy_sobolev.errors import QuadratureError, VerificationError
from hardy_sobolev.funcspace import FAMILY_NAMES
from hardy_sobolev.scalings import SCALING_KINDS
from hardy_sobolev.transforms import MAP_KINDS
from models.run_config import RunConfig, load_config_file
from service import archive_service, experiment_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INVALID = 2

COMMON_KEYS = ("N", "p", "s", "R", "a", "T", "rtol", "max_panels", "output", "format", "threads", "archive")


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """出错时抛异常而不是直接退出，由 run 统一映射退出码"""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _ArgumentError(message)


def create_response(success: bool, data=None, message: str = "", config: Dict[str, Any] | None = None) -> dict:
    """创建统一的输出格式"""
    return {
        "success": success,
        "message": message,
        "config": config,
        "data": data,
    }


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--N", type=int, help="空间维数")
    common.add_argument("--p", type=float, help="指数 p")
    common.add_argument("--s", type=float, help="权指数 s")
    common.add_argument("--R", type=float, help="球半径")
    common.add_argument("--a", type=float, help="势参数 a")
    common.add_argument("--T", type=float, help="Ioku 外半径")
    common.add_argument("--rtol", type=float, help="求积相对容差")
    common.add_argument("--max-panels", dest="max_panels", type=int, help="最大面板数")
    common.add_argument("--output", help="输出文件")
    common.add_argument("--format", choices=("json", "csv"), help="输出格式")
    common.add_argument("--threads", type=int, help="线程上限")
    common.add_argument("--config", help="JSON 配置文件")
    common.add_argument("--archive", help="归档数据库 URL")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="hardy-sobolev", description="Hardy–Sobolev 型变分问题的数值实验")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    sub.add_parser("constants", parents=[common], help="闭式常数")

    p = sub.add_parser("verify-transforms", parents=[common], help="变换恒等式")
    p.add_argument("--kind", choices=MAP_KINDS + ("all",))
    p.add_argument("--m", type=int)

    p = sub.add_parser("quotient", parents=[common], help="单个试验函数的商")
    p.add_argument("--family", choices=experiment_service.QUOTIENT_FAMILIES)
    p.add_argument("--lam", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--center", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("minimize-radial", parents=[common], help="径向梯度流")
    p.add_argument("--nodes", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--initial", choices=("generic", "extremal"))
    p.add_argument("--load-grid", dest="load_grid")
    p.add_argument("--save-grid", dest="save_grid")

    for name, help_text in (("break-scan", "沿 a 网格的对称破缺扫描"), ("a-star", "a_* 的上界")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--a-grid", dest="a_grid", type=float, nargs="+")
        p.add_argument("--family", choices=FAMILY_NAMES, nargs="+")
        p.add_argument("--budget", type=int)
        p.add_argument("--starts", type=int)
        if name == "a-star":
            p.add_argument("--margin", type=float)

    p = sub.add_parser("decay-fit", parents=[common], help="a = 1 时的衰减斜率")
    p.add_argument("--k-min", dest="k_min", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.set_defaults(a=1.0)

    p = sub.add_parser("dim-limit", parents=[common], help="维数趋于无穷的极限")
    p.add_argument("--m-grid", dest="m_grid", type=float, nargs="+")
    p.add_argument("--m", type=int)

    p = sub.add_parser("scaling-scan", parents=[common], help="伸缩能量曲线")
    p.add_argument("--kind", choices=SCALING_KINDS)
    p.add_argument("--b", type=float)
    p.add_argument("--k-max", dest="k_max", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """配置文件打底，命令行显式给出的参数覆盖

    Raises:
        ValueError / ValidationError: 配置文件或参数非法
    """
    raw: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    options = dict(raw.pop("options", {}) or {})
    raw.pop("subcommand", None)
    for key, value in vars(args).items():
        if key in ("subcommand", "config", "verbose") or value is None:
            continue
        if key in COMMON_KEYS:
            raw[key] = value
        else:
            options[key] = value
    if raw.get("T") is not None and math.isinf(raw["T"]):
        raw["T"] = None
    return RunConfig(subcommand=args.subcommand, options=options, **raw)


def _jsonable(value: Any) -> Any:
    """numpy 标量转成 Python 数，非有限浮点数转成 null"""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _csv_rows(data: Dict[str, Any] | None) -> List[Dict[str, Any]]:
    if not data:
        return []
    if "rows" in data:
        return data["rows"]
    return [{k: v for k, v in data.items() if not isinstance(v, (dict, list))}]


def render(envelope: Dict[str, Any], fmt: str) -> str:
    envelope = _jsonable(envelope)
    if fmt == "json":
        return json.dumps(envelope, ensure_ascii=False, indent=2) + "\n"
    buffer = io.StringIO()
    buffer.write(f"# config={json.dumps(envelope['config'], ensure_ascii=False, sort_keys=True)}\n")
    if not envelope["success"]:
        buffer.write(f"# error={envelope['message']}\n")
    rows = _csv_rows(envelope["data"])
    fieldnames: List[str] = []
    for row in rows:
        fieldnames += [k for k in row if k not in fieldnames]
    if fieldnames:
        writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in row.items()})
    return buffer.getvalue()


def _write(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s: %(message)s")


def run(argv: Sequence[str]) -> int:
    """解析参数、执行子命令并写出结果，返回退出码"""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except _ArgumentError as e:
        sys.stderr.write(f"{parser.prog}: error: {e}\n")
        return EXIT_INVALID
    _configure_logging(args.verbose)

    try:
        config = resolve_config(args)
    except (ValueError, ValidationError, OSError) as e:
        _write(render(create_response(False, message=f"配置非法：{e}"), "json"), None)
        return EXIT_INVALID

    echo = config.model_dump()
    try:
        data = experiment_service.run_subcommand(config)
        envelope = create_response(True, data, "ok", echo)
        code = EXIT_OK
    except (ValueError, ValidationError) as e:
        envelope = create_response(False, message=f"参数非法：{e}", config=echo)
        code = EXIT_INVALID
    except VerificationError as e:
        envelope = create_response(False, e.data, f"校验失败：{e}", echo)
        code = EXIT_VERIFICATION
    except QuadratureError as e:
        envelope = create_response(False, message=f"积分不收敛：{e}", config=echo)
        code = EXIT_VERIFICATION

    _write(render(envelope, config.format), config.output)
    if config.archive:
        try:
            archive_service.save_run(config.archive, config, _jsonable(envelope), code)
        except (ValueError, SQLAlchemyError) as e:
            # 归档失败不改变运行本身的退出码
            logger.warning("archive failed: %s", e)
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
