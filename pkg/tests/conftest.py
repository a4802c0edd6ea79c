from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from veriloop import corpus  # noqa: E402
from veriloop.frontend import load  # noqa: E402

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

ADDER = """module adder (
    input [3:0] a,
    input [3:0] b,
    output [4:0] sum
);
    assign sum = a + b;
endmodule
"""

MUX = """module mux (
    input sel,
    input [3:0] a,
    input [3:0] b,
    output reg [3:0] y
);
    always @(*) begin
        if (sel)
            y = a;
        else
            y = b;
    end
endmodule
"""

SWAP = """module swap (
    input clk,
    input load,
    input ia,
    input ib,
    output reg a,
    output reg b
);
    always @(posedge clk) begin
        if (load) begin
            a <= ia;
            b <= ib;
        end else begin
            a <= b;
            b <= a;
        end
    end
endmodule
"""


@pytest.fixture(scope="session")
def corpus_entries() -> list[corpus.Entry]:
    return corpus.entries()


def golden(name: str):
    return load(corpus.get(name).text, name)


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:  # noqa: ARG001
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
