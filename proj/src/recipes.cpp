// placeholder; resolved with the experiment runner
