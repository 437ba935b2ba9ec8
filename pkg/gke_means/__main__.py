from gke_means.cli import main

main()
