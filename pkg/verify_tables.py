import logging
import sys

from divisorlab.checks import run_checks

logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

quick = "--quick" in sys.argv[1:]
results = run_checks(quick=quick)
print(f"Oracle checks ({'quick' if quick else 'full'}):")
for r in results:
    print(f"  [{'ok' if r.ok else 'FAIL'}] {r.name}: {r.detail} ({r.seconds:.2f}s)")

failed = [r.name for r in results if not r.ok]
if failed:
    print(f"\n{len(failed)} check(s) failed: {', '.join(failed)}")
    sys.exit(1)
print("\nAll checks passed")
