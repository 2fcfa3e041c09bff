from agg_bandit.commands import registry

registry.run()
